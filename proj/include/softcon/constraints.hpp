#pragma once

#include <functional>
#include <string>
#include <vector>

#include "softcon/stats.hpp"

namespace softcon {

/// Scalar constraint function g(x) on model states. May throw
/// Error{EvaluationError} where g is undefined; non-finite results are
/// treated the same way.
using StateFunction = std::function<double(const Vector& state)>;

enum class ConstraintKind { Equality, Inequality, Disjunction };

/// One soft constraint: g(x) = 0, g(x) <= 0, or g₁(x) = 0 ∨ g₂(x) = 0 ∨ ...
///
/// `variance` is 1x1 for equality/inequality terms and the branch covariance
/// for disjunctions. Smaller variance means a stricter constraint.
struct ConstraintTerm {
    ConstraintKind kind = ConstraintKind::Equality;
    std::vector<StateFunction> functions;
    Matrix variance;
    std::string name;

    static ConstraintTerm equality(StateFunction g, double variance, std::string name = {});
    static ConstraintTerm inequality(StateFunction g, double variance, std::string name = {});
    static ConstraintTerm disjunction(std::vector<StateFunction> branches, const Vector& variances,
                                      std::string name = {});
    static ConstraintTerm disjunction_with_covariance(std::vector<StateFunction> branches, Matrix cov,
                                                      std::string name = {});

    void validate() const;
};

/// Ordered collection of independent constraint terms. An empty set is the
/// unconstrained problem.
class ConstraintSet {
public:
    ConstraintSet() = default;
    explicit ConstraintSet(std::vector<ConstraintTerm> terms);

    void add(ConstraintTerm term);
    const std::vector<ConstraintTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

private:
    std::vector<ConstraintTerm> terms_;
};

/// Counters for conditions that are absorbed into the likelihood rather than thrown.
struct LikelihoodDiagnostics {
    std::size_t evaluation_errors = 0;
    std::size_t non_positive_disjunctions = 0;

    LikelihoodDiagnostics& operator+=(const LikelihoodDiagnostics& other) {
        evaluation_errors += other.evaluation_errors;
        non_positive_disjunctions += other.non_positive_disjunctions;
        return *this;
    }
};

/// Floor applied to the disjunction likelihood before the log is taken.
inline constexpr double kDisjunctionFloor = 1e-300;

double equality_residual(const ConstraintTerm& term, const Vector& x);
double inequality_residual(const ConstraintTerm& term, const Vector& x);

/// Log density of the term's residual under its zero-mean Gaussian. Undefined
/// g yields -inf and bumps diagnostics->evaluation_errors.
double term_log_likelihood(const ConstraintTerm& term, const Vector& x, LikelihoodDiagnostics* diagnostics = nullptr);

/// Sum over terms; 0 for the empty set.
double set_log_likelihood(const ConstraintSet& set, const Vector& x, LikelihoodDiagnostics* diagnostics = nullptr);

/// Penalty entering the MAP objective: r²/σ² for equality and inequality
/// terms, -2 log p for disjunctions. +inf where g is undefined. Equal to
/// -2 term_log_likelihood up to an x-independent constant.
double term_penalty(const ConstraintTerm& term, const Vector& x);
double set_penalty(const ConstraintSet& set, const Vector& x);

/// G(x) = -0.25 log x₁ + 0.25 log x₂ - 2, equivalent to θ₁ + θ₂ - 2 through
/// the synthetic forward model.
double synthetic_log_constraint(const Vector& x);

/// Built-in terms by configuration name ("synthetic-log-equality").
ConstraintTerm make_constraint(const std::string& name, double variance);

}  // namespace softcon
