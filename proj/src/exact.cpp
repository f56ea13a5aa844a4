#include "softcon/exact.hpp"

#include "softcon/error.hpp"

namespace softcon {

PriorSamples draw_prior_samples(const PriorSpec& prior, const ForwardModel& model, std::size_t count, RngStream& rng) {
    if (count == 0) throw Error(ErrorKind::ConfigError, "sample count must be positive");
    if (prior.gaussian.dim() != model.param_dim())
        throw Error(ErrorKind::DimensionMismatch, "prior dimension does not match model parameters");
    PriorSamples out;
    out.params = mvn_sample(prior.gaussian, count, rng);
    out.states.reserve(count);
    for (const auto& theta : out.params) out.states.push_back(model.evaluate(theta));
    return out;
}

WeightedSamples compute_posterior_weights(const PriorSamples& samples, const PriorSpec& prior, const DataSpec& data,
                                          const ObservationOperator& h, const ConstraintSet& constraints) {
    const std::size_t n = samples.params.size();
    if (n == 0 || samples.states.size() != n) throw Error(ErrorKind::DimensionMismatch, "empty or ragged sample set");

    WeightedSamples out;
    out.params = samples.params;
    out.states = samples.states;
    out.log_prior.resize(static_cast<Eigen::Index>(n));
    out.log_data.resize(static_cast<Eigen::Index>(n));
    out.log_constraint.resize(static_cast<Eigen::Index>(n));

    // The prior may be degenerate (zero covariance); its density is then undefined
    // and only the weights matter.
    bool prior_has_density = true;
    try {
        cholesky(prior.gaussian.cov);
    } catch (const Error&) {
        prior_has_density = false;
    }
    const GaussianSpec noise = data.as_gaussian();
    for (std::size_t j = 0; j < n; ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        out.log_prior(i) = prior_has_density ? mvn_logpdf(samples.params[j], prior.gaussian) : 0.0;
        out.log_data(i) = mvn_logpdf(h.apply(samples.states[j]), noise);
        out.log_constraint(i) = set_log_likelihood(constraints, samples.states[j], &out.diagnostics);
    }
    out.posterior_weights = normalize_log_weights(out.log_data + out.log_constraint);
    return out;
}

ExactEstimate estimate(const WeightedSamples& samples, const ForwardModel& model, const ObservationOperator& h) {
    ExactEstimate out;
    const Vector theta_mean = weighted_mean(samples.params, samples.posterior_weights);
    out.expectation = {theta_mean, model.evaluate(theta_mean), {}};
    out.expectation.output = h.apply(out.expectation.state);

    const Vector score = samples.log_prior + samples.log_data + samples.log_constraint;
    std::size_t best = 0;
    for (std::size_t j = 1; j < samples.size(); ++j)
        if (score(static_cast<Eigen::Index>(j)) > score(static_cast<Eigen::Index>(best))) best = j;
    out.map_index = best;
    out.map = {samples.params[best], model.evaluate(samples.params[best]), {}};
    out.map.output = h.apply(out.map.state);
    return out;
}

double map_optimization_objective(const Vector& theta, const ForwardModel& model, const PriorSpec& prior,
                                  const DataSpec& data, const ObservationOperator& h, const ConstraintSet& constraints) {
    const Vector state = model.evaluate(theta);
    const double prior_term = whitened_squared_norm(theta - prior.gaussian.mean, prior.gaussian.cov);
    const double data_term = whitened_squared_norm(data.observed_mean - h.apply(state), data.noise_cov);
    return prior_term + data_term + set_penalty(constraints, state);
}

}  // namespace softcon
