#include "softcon/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "softcon/error.hpp"

namespace softcon {

namespace {

constexpr double kWeightSumTolerance = 1e-12;

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << what << " must be square, got " << m.rows() << "x" << m.cols();
        throw Error(ErrorKind::DimensionMismatch, os.str());
    }
}

// Shared loop for strict and semidefinite factorization.
Matrix factor(const Matrix& m, bool allow_zero_pivots) {
    require_square(m, "covariance");
    const Eigen::Index n = m.rows();
    const double trace = m.trace();
    const double tol = kPivotTolerance * std::max(std::abs(trace), std::numeric_limits<double>::min());
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = m(j, j);
        for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (pivot > tol) {
            const double d = std::sqrt(pivot);
            l(j, j) = d;
            for (Eigen::Index i = j + 1; i < n; ++i) {
                double s = m(i, j);
                for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
                l(i, j) = s / d;
            }
        } else if (allow_zero_pivots && pivot >= -tol) {
            // Column stays zero; the direction carries no variance.
        } else {
            std::ostringstream os;
            os << "pivot " << j << " = " << pivot << " (threshold " << tol << ")";
            throw Error(ErrorKind::NotPositiveDefinite, os.str());
        }
    }
    return l;
}

}  // namespace

GaussianSpec::GaussianSpec(Vector m, Matrix c) : mean(std::move(m)), cov(std::move(c)) {}

void GaussianSpec::validate() const {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        std::ostringstream os;
        os << "mean has dim " << mean.size() << " but covariance is " << cov.rows() << "x" << cov.cols();
        throw Error(ErrorKind::DimensionMismatch, os.str());
    }
    if (!mean.allFinite() || !cov.allFinite())
        throw Error(ErrorKind::NotPositiveDefinite, "non-finite entries in Gaussian");
    const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1.0);
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(ErrorKind::NotPositiveDefinite, "covariance is not symmetric");
    semidefinite_factor(cov);
}

Matrix cholesky(const Matrix& m) { return factor(m, false); }

Matrix semidefinite_factor(const Matrix& m) { return factor(m, true); }

std::vector<Vector> mvn_sample(const GaussianSpec& spec, std::size_t count, RngStream& rng) {
    if (spec.cov.rows() != spec.dim() || spec.cov.cols() != spec.dim())
        throw Error(ErrorKind::DimensionMismatch, "covariance does not match mean");
    const Matrix l = semidefinite_factor(spec.cov);
    const Eigen::Index n = spec.dim();
    std::vector<Vector> draws;
    draws.reserve(count);
    Vector xi(n);
    for (std::size_t s = 0; s < count; ++s) {
        for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.standard_normal();
        draws.emplace_back(spec.mean + l.triangularView<Eigen::Lower>() * xi);
    }
    return draws;
}

double whitened_squared_norm(const Vector& residual, const Matrix& cov) {
    if (cov.rows() != residual.size() || cov.cols() != residual.size())
        throw Error(ErrorKind::DimensionMismatch, "residual does not match covariance");
    const Matrix l = cholesky(cov);
    const Vector u = l.triangularView<Eigen::Lower>().solve(residual);
    return u.squaredNorm();
}

double mvn_logpdf(const Vector& point, const GaussianSpec& spec) {
    if (point.size() != spec.dim())
        throw Error(ErrorKind::DimensionMismatch, "point does not match Gaussian dimension");
    const Matrix l = cholesky(spec.cov);
    const Vector u = l.triangularView<Eigen::Lower>().solve(point - spec.mean);
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double n = static_cast<double>(spec.dim());
    return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + u.squaredNorm());
}

void require_normalized(const Vector& weights) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        if (!(weights(j) >= 0.0))
            throw Error(ErrorKind::WeightsNotNormalized, "negative or NaN weight at index " + std::to_string(j));
        sum += weights(j);
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "weights sum to " << sum;
        throw Error(ErrorKind::WeightsNotNormalized, os.str());
    }
}

Vector weighted_mean(std::span<const Vector> points, const Vector& weights) {
    if (points.empty() || static_cast<Eigen::Index>(points.size()) != weights.size())
        throw Error(ErrorKind::DimensionMismatch, "need one weight per point");
    require_normalized(weights);
    Vector mean = Vector::Zero(points.front().size());
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (points[j].size() != mean.size())
            throw Error(ErrorKind::DimensionMismatch, "points have differing dimensions");
        mean += weights(static_cast<Eigen::Index>(j)) * points[j];
    }
    return mean;
}

Matrix weighted_covariance(std::span<const Vector> points, const Vector& weights, const Vector& mean) {
    if (points.empty() || static_cast<Eigen::Index>(points.size()) != weights.size())
        throw Error(ErrorKind::DimensionMismatch, "need one weight per point");
    require_normalized(weights);
    const Eigen::Index n = mean.size();
    Matrix cov = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (points[j].size() != n)
            throw Error(ErrorKind::DimensionMismatch, "point dimension does not match mean");
        const Vector d = points[j] - mean;
        cov.noalias() += weights(static_cast<Eigen::Index>(j)) * d * d.transpose();
    }
    // Exact symmetry; rank-one updates can leave last-bit asymmetry.
    return 0.5 * (cov + cov.transpose());
}

Vector normalize_log_weights(const Vector& log_weights) {
    if (log_weights.size() == 0) throw Error(ErrorKind::DimensionMismatch, "no weights");
    double max_log = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < log_weights.size(); ++j) {
        const double v = log_weights(j);
        if (std::isnan(v)) throw Error(ErrorKind::EvaluationError, "NaN log weight at index " + std::to_string(j));
        max_log = std::max(max_log, v);
    }
    if (!std::isfinite(max_log)) {
        std::ostringstream os;
        os << "every log weight is -inf (max log weight " << max_log << ")";
        throw Error(ErrorKind::AllWeightsZero, os.str());
    }
    Vector w(log_weights.size());
    double sum = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        w(j) = std::exp(log_weights(j) - max_log);
        sum += w(j);
    }
    w /= sum;
    return w;
}

double effective_sample_size(const Vector& weights) { return 1.0 / weights.squaredNorm(); }

}  // namespace softcon
