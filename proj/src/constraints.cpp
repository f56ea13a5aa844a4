#include "softcon/constraints.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "softcon/error.hpp"

namespace softcon {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxBranches = 16;

double evaluate(const StateFunction& g, const Vector& x) {
    if (!x.allFinite()) throw Error(ErrorKind::EvaluationError, "non-finite state");
    const double v = g(x);
    if (!std::isfinite(v)) throw Error(ErrorKind::EvaluationError, "constraint function returned non-finite value");
    return v;
}

double scalar_variance(const ConstraintTerm& term) { return term.variance(0, 0); }

double gaussian_log_density(double residual, double variance) {
    return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + residual * residual / variance);
}

Matrix submatrix(const Matrix& m, const std::vector<Eigen::Index>& idx) {
    Matrix s(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) s(a, b) = m(idx[a], idx[b]);
    return s;
}

// log of the union probability by inclusion-exclusion over branch subsets,
// floored at kDisjunctionFloor.
double disjunction_log_likelihood(const ConstraintTerm& term, const Vector& x, LikelihoodDiagnostics* diagnostics) {
    const std::size_t n = term.functions.size();
    Vector residuals(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) residuals(static_cast<Eigen::Index>(i)) = evaluate(term.functions[i], x);

    const std::size_t subsets = (std::size_t{1} << n) - 1;
    std::vector<double> log_p(subsets);
    std::vector<int> sign(subsets);
    double max_log = kNegInf;
    for (std::size_t mask = 1; mask <= subsets; ++mask) {
        std::vector<Eigen::Index> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) idx.push_back(static_cast<Eigen::Index>(i));
        Vector r(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t a = 0; a < idx.size(); ++a) r(static_cast<Eigen::Index>(a)) = residuals(idx[a]);
        const GaussianSpec g(Vector::Zero(r.size()), submatrix(term.variance, idx));
        log_p[mask - 1] = mvn_logpdf(r, g);
        sign[mask - 1] = (idx.size() % 2 == 1) ? 1 : -1;
        max_log = std::max(max_log, log_p[mask - 1]);
    }
    double scaled = 0.0;
    for (std::size_t s = 0; s < subsets; ++s) scaled += sign[s] * std::exp(log_p[s] - max_log);

    const double log_floor = std::log(kDisjunctionFloor);
    if (!(scaled > 0.0)) {
        if (diagnostics) ++diagnostics->non_positive_disjunctions;
        return log_floor;
    }
    return std::max(max_log + std::log(scaled), log_floor);
}

}  // namespace

ConstraintTerm ConstraintTerm::equality(StateFunction g, double variance, std::string name) {
    ConstraintTerm t{ConstraintKind::Equality, {std::move(g)}, Matrix::Constant(1, 1, variance), std::move(name)};
    t.validate();
    return t;
}

ConstraintTerm ConstraintTerm::inequality(StateFunction g, double variance, std::string name) {
    ConstraintTerm t{ConstraintKind::Inequality, {std::move(g)}, Matrix::Constant(1, 1, variance), std::move(name)};
    t.validate();
    return t;
}

ConstraintTerm ConstraintTerm::disjunction(std::vector<StateFunction> branches, const Vector& variances,
                                           std::string name) {
    return disjunction_with_covariance(std::move(branches), Matrix(variances.asDiagonal()), std::move(name));
}

ConstraintTerm ConstraintTerm::disjunction_with_covariance(std::vector<StateFunction> branches, Matrix cov, std::string name) {
    ConstraintTerm t{ConstraintKind::Disjunction, std::move(branches), std::move(cov), std::move(name)};
    t.validate();
    return t;
}

void ConstraintTerm::validate() const {
    const auto n = static_cast<Eigen::Index>(functions.size());
    if (kind == ConstraintKind::Disjunction) {
        if (functions.size() < 2 || functions.size() > kMaxBranches)
            throw Error(ErrorKind::ConfigError, "disjunction needs between 2 and 16 branches");
    } else if (functions.size() != 1) {
        throw Error(ErrorKind::ConfigError, "equality/inequality terms take exactly one function");
    }
    if (variance.rows() != n || variance.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "constraint variance does not match branch count");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(variance(i, i) > 0.0) || !std::isfinite(variance(i, i)))
            throw Error(ErrorKind::ConfigError, "constraint variances must be positive and finite");
    cholesky(variance);
}

ConstraintSet::ConstraintSet(std::vector<ConstraintTerm> terms) {
    for (auto& t : terms) add(std::move(t));
}

void ConstraintSet::add(ConstraintTerm term) {
    term.validate();
    terms_.push_back(std::move(term));
}

double equality_residual(const ConstraintTerm& term, const Vector& x) { return evaluate(term.functions.front(), x); }

double inequality_residual(const ConstraintTerm& term, const Vector& x) {
    return std::max(0.0, evaluate(term.functions.front(), x));
}

double term_log_likelihood(const ConstraintTerm& term, const Vector& x, LikelihoodDiagnostics* diagnostics) {
    try {
        switch (term.kind) {
            case ConstraintKind::Equality:
                return gaussian_log_density(equality_residual(term, x), scalar_variance(term));
            case ConstraintKind::Inequality:
                return gaussian_log_density(inequality_residual(term, x), scalar_variance(term));
            case ConstraintKind::Disjunction:
                return disjunction_log_likelihood(term, x, diagnostics);
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::EvaluationError) throw;
        if (diagnostics) ++diagnostics->evaluation_errors;
    }
    return kNegInf;
}

double set_log_likelihood(const ConstraintSet& set, const Vector& x, LikelihoodDiagnostics* diagnostics) {
    double total = 0.0;
    for (const auto& term : set.terms()) total += term_log_likelihood(term, x, diagnostics);
    return total;
}

double term_penalty(const ConstraintTerm& term, const Vector& x) {
    try {
        switch (term.kind) {
            case ConstraintKind::Equality: {
                const double r = equality_residual(term, x);
                return r * r / scalar_variance(term);
            }
            case ConstraintKind::Inequality: {
                const double r = inequality_residual(term, x);
                return r * r / scalar_variance(term);
            }
            case ConstraintKind::Disjunction:
                return -2.0 * disjunction_log_likelihood(term, x, nullptr);
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::EvaluationError) throw;
    }
    return std::numeric_limits<double>::infinity();
}

double set_penalty(const ConstraintSet& set, const Vector& x) {
    double total = 0.0;
    for (const auto& term : set.terms()) total += term_penalty(term, x);
    return total;
}

double synthetic_log_constraint(const Vector& x) {
    if (x.size() != 2) throw Error(ErrorKind::DimensionMismatch, "synthetic constraint expects 2 states");
    if (!(x(0) > 0.0) || !(x(1) > 0.0))
        throw Error(ErrorKind::EvaluationError, "log of non-positive state");
    return -0.25 * std::log(x(0)) + 0.25 * std::log(x(1)) - 2.0;
}

ConstraintTerm make_constraint(const std::string& name, double variance) {
    if (name == "synthetic-log-equality")
        return ConstraintTerm::equality(synthetic_log_constraint, variance, name);
    throw Error(ErrorKind::ConfigError, "unknown constraint '" + name + "'");
}

}  // namespace softcon
