#pragma once

#include <memory>
#include <string>

#include "softcon/stats.hpp"

namespace softcon {

/// Deterministic map from parameters θ to model states x.
///
/// Implementations must tolerate concurrent evaluate() calls on distinct inputs.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;

    virtual Eigen::Index param_dim() const = 0;
    virtual Eigen::Index state_dim() const = 0;
    virtual Vector evaluate(const Vector& theta) const = 0;
};

/// Linear projection y = H x from state space to observed outputs.
class ObservationOperator {
public:
    explicit ObservationOperator(Matrix h) : h_(std::move(h)) {}

    const Matrix& matrix() const { return h_; }
    Eigen::Index output_dim() const { return h_.rows(); }
    Eigen::Index state_dim() const { return h_.cols(); }

    Vector apply(const Vector& state) const;

private:
    Matrix h_;
};

/// Two Gaussian bumps centered at (-1,-1) and (1,1):
///   x₁ = exp(-(θ₁+1)² - (θ₂+1)²),  x₂ = exp(-(θ₁-1)² - (θ₂-1)²).
class SyntheticModel final : public ForwardModel {
public:
    Eigen::Index param_dim() const override { return 2; }
    Eigen::Index state_dim() const override { return 2; }
    Vector evaluate(const Vector& theta) const override;
};

/// Observation row H = [-1.5, -1.0] of the synthetic benchmark.
ObservationOperator synthetic_observation();

/// The benchmark's true parameter and observed output.
inline const Vector& synthetic_true_theta() {
    static const Vector t = Vector::Ones(2);
    return t;
}
inline constexpr double kSyntheticObserved = -1.0;

/// Radius √(log 1.5) of the circle of spurious minima around (-1,-1).
double spurious_minimum_radius();

Vector synthetic_forward(const Vector& theta);

/// H F(θ).
Vector reconstruct_output(const ForwardModel& model, const ObservationOperator& h, const Vector& theta);

/// ‖ȳ - H F(θ)‖² for the synthetic benchmark.
double cost_function(const Vector& theta, const Vector& observed);

enum class MinimumGroup { GroupI, GroupII, Neither };

std::string to_string(MinimumGroup group);

/// GroupI when within tol of (1,1); GroupII when within tol of the spurious
/// circle; GroupI is tested first.
MinimumGroup classify_minimum(const Vector& theta, double tol = 0.1);

/// Lookup by configuration name. Only "synthetic" is built in.
std::shared_ptr<const ForwardModel> make_model(const std::string& name);
ObservationOperator make_observation(const std::string& model_name);

}  // namespace softcon
