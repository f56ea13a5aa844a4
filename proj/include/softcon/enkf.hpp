#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "softcon/constraints.hpp"
#include "softcon/exact.hpp"
#include "softcon/model.hpp"

namespace softcon {

/// Weighted ensemble over the augmented state z = [θ; x].
///
/// Members are stored column-wise: members.col(j) is z⁽ʲ⁾, its first
/// param_dim rows are θ⁽ʲ⁾ and the remainder x⁽ʲ⁾.
struct Ensemble {
    Matrix members;
    Vector weights;
    Eigen::Index param_dim = 0;

    std::size_t size() const { return static_cast<std::size_t>(members.cols()); }
    Eigen::Index state_dim() const { return members.rows() - param_dim; }
    Vector theta(std::size_t j) const { return members.col(static_cast<Eigen::Index>(j)).head(param_dim); }
    Vector state(std::size_t j) const { return members.col(static_cast<Eigen::Index>(j)).tail(state_dim()); }
};

/// Which state the constraint likelihood is evaluated on during reweighting.
enum class ConstraintState {
    Member,   ///< the member's own (Kalman-updated) x
    Forward,  ///< F(θ) re-evaluated at the member's updated parameters
};

struct EnkfConfig {
    PriorSpec prior;
    DataSpec data;
    ConstraintSet constraints;
    std::size_t ensemble_size = 500;
    std::size_t max_iterations = 1000;
    double convergence_tol = 1e-6;
    std::uint64_t seed = 1;
    /// Mean of the first sampling distribution. Falls back to the prior mean when empty.
    Vector initial_guess;
    bool perturbed_observations = false;
    /// Added to the diagonal of the resampling covariance; 0 disables it.
    double resample_jitter = 0.0;
    bool snapshot_ensembles = false;
    ConstraintState constraint_state = ConstraintState::Member;

    void validate(const ForwardModel& model, const ObservationOperator& h) const;
};

/// Consecutive sub-tolerance steps needed to declare convergence.
inline constexpr std::size_t kConvergenceWindow = 10;

struct IterationRecord {
    std::size_t iteration = 0;
    Vector theta_bar;
    Vector output;  ///< H F(θ̄)
    Matrix theta_cov;
    double ess = 0.0;
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    /// Post-reweighting ensembles, filled only with snapshot_ensembles.
    std::vector<Ensemble> snapshots;
};

struct EnkfResult {
    PointEstimate estimate;
    IterationTrace trace;
    std::size_t iterations = 0;
    bool converged = false;
    LikelihoodDiagnostics diagnostics;
};

struct EnsembleMoments {
    Vector mean;
    Matrix cov;
};

struct ConstrainedEstimate {
    Vector z_bar;
    Vector theta_bar;
    Matrix theta_cov;
};

/// θ⁽ʲ⁾ ~ N(θ⁰, Σ_θ), x⁽ʲ⁾ = F(θ⁽ʲ⁾), uniform weights.
Ensemble init_ensemble(const EnkfConfig& config, const ForwardModel& model, RngStream& rng);

EnsembleMoments ensemble_moments(const Ensemble& e);

/// H̃ = [0 | H], acting on the augmented state.
Matrix augmented_observation(const ObservationOperator& h, Eigen::Index param_dim);

/// z⁽ʲ⁾ ← z⁽ʲ⁾ + C H̃ᵀ (H̃ C H̃ᵀ + Σ_l)⁻¹ (ȳ - H̃ z⁽ʲ⁾). Weights unchanged.
/// With `perturbation` set, each member sees ȳ + εⱼ, εⱼ ~ N(0, Σ_l).
Ensemble kalman_update(const Ensemble& e, const Matrix& h_aug, const DataSpec& data,
                       RngStream* perturbation = nullptr);

/// w'ⱼ ∝ wⱼ p(G(x)=0 | z⁽ʲ⁾), computed in log space.
Ensemble constraint_reweigh(const Ensemble& e, const ConstraintSet& constraints,
                            ConstraintState mode = ConstraintState::Member, const ForwardModel* model = nullptr,
                            LikelihoodDiagnostics* diagnostics = nullptr);

ConstrainedEstimate constrained_estimate(const Ensemble& e);

/// Fresh ensemble θ⁽ʲ⁾ ~ N(θ̄, Σ + jitter·I) with uniform weights.
Ensemble resample(const Vector& theta_bar, const Matrix& theta_cov, const ForwardModel& model, std::size_t count,
                  RngStream& rng, double jitter = 0.0);

/// Iterates sample → Kalman update → constraint reweighting → estimate until
/// θ̄ moves less than convergence_tol (∞-norm) for kConvergenceWindow
/// consecutive iterations or max_iterations is reached.
EnkfResult run(const EnkfConfig& config, const ForwardModel& model, const ObservationOperator& h);

}  // namespace softcon
