#pragma once

#include <cstddef>
#include <vector>

#include "softcon/constraints.hpp"
#include "softcon/model.hpp"

namespace softcon {

/// Gaussian prior N(θ̂, Σ_θ) over parameters.
struct PriorSpec {
    GaussianSpec gaussian;
};

/// Observed output ȳ and its noise covariance Σ_l.
struct DataSpec {
    Vector observed_mean;
    Matrix noise_cov;

    GaussianSpec as_gaussian() const { return {observed_mean, noise_cov}; }
};

struct PriorSamples {
    std::vector<Vector> params;
    std::vector<Vector> states;
};

/// Prior draws with per-sample log terms and self-normalized posterior weights.
struct WeightedSamples {
    std::vector<Vector> params;
    std::vector<Vector> states;
    Vector log_prior;
    Vector log_data;
    Vector log_constraint;
    Vector posterior_weights;
    LikelihoodDiagnostics diagnostics;

    std::size_t size() const { return params.size(); }
};

/// θ, x = F(θ) and y = H x at one estimate.
struct PointEstimate {
    Vector theta;
    Vector state;
    Vector output;
};

struct ExactEstimate {
    PointEstimate expectation;
    PointEstimate map;
    std::size_t map_index = 0;
};

PriorSamples draw_prior_samples(const PriorSpec& prior, const ForwardModel& model, std::size_t count, RngStream& rng);

/// Importance weights with the prior as proposal: log w̃ⱼ = log p(D|θⱼ) + log p(G=0|θⱼ).
/// The prior density is recorded in log_prior but does not enter the weights.
WeightedSamples compute_posterior_weights(const PriorSamples& samples, const PriorSpec& prior, const DataSpec& data,
                                          const ObservationOperator& h, const ConstraintSet& constraints);

/// Posterior mean over the weights; MAP is the sample with the largest
/// log prior + log data + log constraint (lowest index on ties).
ExactEstimate estimate(const WeightedSamples& samples, const ForwardModel& model, const ObservationOperator& h);

/// ‖Σ_θ^{-1/2}(θ-θ̂)‖² + ‖Σ_l^{-1/2}(ȳ-HF(θ))‖² + constraint penalties.
double map_optimization_objective(const Vector& theta, const ForwardModel& model, const PriorSpec& prior,
                                  const DataSpec& data, const ObservationOperator& h, const ConstraintSet& constraints);

}  // namespace softcon
