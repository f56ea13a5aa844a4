#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "softcon/random.hpp"

namespace softcon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Mean and covariance of a multivariate normal.
///
/// Used for the parameter prior, the data-noise model and constraint noise.
/// The covariance may be singular (e.g. a collapsed ensemble); sampling then
/// stays on the supporting subspace and a zero covariance yields the mean.
struct GaussianSpec {
    Vector mean;
    Matrix cov;

    GaussianSpec() = default;
    GaussianSpec(Vector m, Matrix c);

    Eigen::Index dim() const { return mean.size(); }

    /// Throws DimensionMismatch / NotPositiveDefinite when the invariants fail.
    void validate() const;
};

/// Relative tolerance applied to Cholesky pivots, scaled by the trace.
inline constexpr double kPivotTolerance = 1e-12;

/// Lower-triangular L with L Lᵀ = m. Requires strictly positive pivots.
Matrix cholesky(const Matrix& m);

/// Factor for sampling from a positive semi-definite matrix: pivots within
/// tolerance of zero produce a zero column instead of failing.
Matrix semidefinite_factor(const Matrix& m);

/// Draws `count` samples mean + L ξ, ξ ~ N(0, I).
std::vector<Vector> mvn_sample(const GaussianSpec& spec, std::size_t count, RngStream& rng);

double mvn_logpdf(const Vector& point, const GaussianSpec& spec);

/// Squared Mahalanobis norm rᵀ cov⁻¹ r via the Cholesky factor.
double whitened_squared_norm(const Vector& residual, const Matrix& cov);

Vector weighted_mean(std::span<const Vector> points, const Vector& weights);
Matrix weighted_covariance(std::span<const Vector> points, const Vector& weights, const Vector& mean);

/// Throws WeightsNotNormalized unless weights are nonnegative and sum to one within 1e-12.
void require_normalized(const Vector& weights);

/// Normalizes exp(log_weights) after subtracting the maximum. The sum is
/// accumulated sequentially by index. Throws AllWeightsZero if every entry is -inf.
Vector normalize_log_weights(const Vector& log_weights);

/// 1 / Σ w².
double effective_sample_size(const Vector& weights);

}  // namespace softcon
