#include "softcon/enkf.hpp"

#include <cmath>
#include <sstream>

#include "softcon/error.hpp"

namespace softcon {

namespace {

Ensemble ensemble_from_params(const std::vector<Vector>& params, const ForwardModel& model) {
    const Eigen::Index dp = model.param_dim();
    const Eigen::Index dx = model.state_dim();
    Ensemble e;
    e.param_dim = dp;
    e.members.resize(dp + dx, static_cast<Eigen::Index>(params.size()));
    for (std::size_t j = 0; j < params.size(); ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        e.members.col(c).head(dp) = params[j];
        e.members.col(c).tail(dx) = model.evaluate(params[j]);
    }
    e.weights = Vector::Constant(static_cast<Eigen::Index>(params.size()), 1.0 / static_cast<double>(params.size()));
    return e;
}

std::vector<Vector> columns(const Matrix& m) {
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j));
    return out;
}

}  // namespace

void EnkfConfig::validate(const ForwardModel& model, const ObservationOperator& h) const {
    if (ensemble_size < 2) throw Error(ErrorKind::ConfigError, "ensemble_size must be at least 2");
    if (max_iterations < 1) throw Error(ErrorKind::ConfigError, "max_iterations must be at least 1");
    if (!(convergence_tol >= 0.0)) throw Error(ErrorKind::ConfigError, "convergence_tol must be nonnegative");
    if (!(resample_jitter >= 0.0)) throw Error(ErrorKind::ConfigError, "resample_jitter must be nonnegative");
    prior.gaussian.validate();
    if (prior.gaussian.dim() != model.param_dim())
        throw Error(ErrorKind::DimensionMismatch, "prior dimension does not match model parameters");
    if (initial_guess.size() != 0 && initial_guess.size() != model.param_dim())
        throw Error(ErrorKind::DimensionMismatch, "initial guess dimension does not match model parameters");
    if (h.state_dim() != model.state_dim())
        throw Error(ErrorKind::DimensionMismatch, "observation operator does not match model state");
    if (data.observed_mean.size() != h.output_dim())
        throw Error(ErrorKind::DimensionMismatch, "observed data does not match observation operator");
    cholesky(data.noise_cov);
}

Ensemble init_ensemble(const EnkfConfig& config, const ForwardModel& model, RngStream& rng) {
    const Vector& mean = config.initial_guess.size() != 0 ? config.initial_guess : config.prior.gaussian.mean;
    const GaussianSpec spec(mean, config.prior.gaussian.cov);
    return ensemble_from_params(mvn_sample(spec, config.ensemble_size, rng), model);
}

EnsembleMoments ensemble_moments(const Ensemble& e) {
    const auto z = columns(e.members);
    EnsembleMoments m;
    m.mean = weighted_mean(z, e.weights);
    m.cov = weighted_covariance(z, e.weights, m.mean);
    return m;
}

Matrix augmented_observation(const ObservationOperator& h, Eigen::Index param_dim) {
    Matrix h_aug = Matrix::Zero(h.output_dim(), param_dim + h.state_dim());
    h_aug.rightCols(h.state_dim()) = h.matrix();
    return h_aug;
}

Ensemble kalman_update(const Ensemble& e, const Matrix& h_aug, const DataSpec& data, RngStream* perturbation) {
    if (h_aug.cols() != e.members.rows())
        throw Error(ErrorKind::DimensionMismatch, "augmented observation operator does not match ensemble");
    if (data.observed_mean.size() != h_aug.rows())
        throw Error(ErrorKind::DimensionMismatch, "observed data does not match observation operator");

    const EnsembleMoments m = ensemble_moments(e);
    const Matrix cross = m.cov * h_aug.transpose();
    const Matrix innovation = h_aug * cross + data.noise_cov;
    Matrix l;
    try {
        l = cholesky(innovation);
    } catch (const Error& err) {
        throw Error(ErrorKind::SingularInnovation, err.what());
    }
    // K = C H̃ᵀ S⁻¹ via two triangular solves on Kᵀ.
    const Matrix gain_t = l.transpose().triangularView<Eigen::Upper>().solve(
        l.triangularView<Eigen::Lower>().solve(cross.transpose()));

    Matrix targets = data.observed_mean.replicate(1, e.members.cols());
    if (perturbation) {
        const GaussianSpec noise(Vector::Zero(data.observed_mean.size()), data.noise_cov);
        const auto eps = mvn_sample(noise, e.size(), *perturbation);
        for (std::size_t j = 0; j < eps.size(); ++j) targets.col(static_cast<Eigen::Index>(j)) += eps[j];
    }
    Ensemble out = e;
    out.members += gain_t.transpose() * (targets - h_aug * e.members);
    return out;
}

Ensemble constraint_reweigh(const Ensemble& e, const ConstraintSet& constraints, ConstraintState mode,
                            const ForwardModel* model, LikelihoodDiagnostics* diagnostics) {
    require_normalized(e.weights);
    if (constraints.empty()) return e;
    if (mode == ConstraintState::Forward && model == nullptr)
        throw Error(ErrorKind::ConfigError, "forward-state reweighting needs a model");

    Vector log_w(e.weights.size());
    for (std::size_t j = 0; j < e.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        const Vector x = mode == ConstraintState::Member ? e.state(j) : model->evaluate(e.theta(j));
        log_w(i) = std::log(e.weights(i)) + set_log_likelihood(constraints, x, diagnostics);
    }
    Ensemble out = e;
    out.weights = normalize_log_weights(log_w);
    return out;
}

ConstrainedEstimate constrained_estimate(const Ensemble& e) {
    const auto z = columns(e.members);
    ConstrainedEstimate out;
    out.z_bar = weighted_mean(z, e.weights);
    out.theta_bar = out.z_bar.head(e.param_dim);
    std::vector<Vector> thetas;
    thetas.reserve(z.size());
    for (const auto& zj : z) thetas.emplace_back(zj.head(e.param_dim));
    out.theta_cov = weighted_covariance(thetas, e.weights, out.theta_bar);
    return out;
}

Ensemble resample(const Vector& theta_bar, const Matrix& theta_cov, const ForwardModel& model, std::size_t count,
                  RngStream& rng, double jitter) {
    Matrix cov = theta_cov;
    if (jitter > 0.0) cov.diagonal().array() += jitter;
    return ensemble_from_params(mvn_sample(GaussianSpec(theta_bar, cov), count, rng), model);
}

EnkfResult run(const EnkfConfig& config, const ForwardModel& model, const ObservationOperator& h) {
    config.validate(model, h);
    const Matrix h_aug = augmented_observation(h, model.param_dim());

    EnkfResult result;
    Vector theta_bar;
    Matrix theta_cov;
    std::size_t quiet_steps = 0;
    for (std::size_t k = 0; k < config.max_iterations; ++k) {
        RngStream sampling = RngStream::derive(config.seed, "enkf-sample", k);
        Ensemble prior_ensemble = k == 0 ? init_ensemble(config, model, sampling)
                                         : resample(theta_bar, theta_cov, model, config.ensemble_size, sampling,
                                                    config.resample_jitter);

        std::optional<RngStream> perturb;
        if (config.perturbed_observations) perturb = RngStream::derive(config.seed, "enkf-perturb", k);
        const Ensemble updated = kalman_update(prior_ensemble, h_aug, config.data, perturb ? &*perturb : nullptr);
        const Ensemble posterior =
            constraint_reweigh(updated, config.constraints, config.constraint_state, &model, &result.diagnostics);
        const ConstrainedEstimate est = constrained_estimate(posterior);

        const bool quiet = k > 0 && (est.theta_bar - theta_bar).cwiseAbs().maxCoeff() < config.convergence_tol;
        quiet_steps = quiet ? quiet_steps + 1 : 0;
        theta_bar = est.theta_bar;
        theta_cov = est.theta_cov;

        result.trace.records.push_back(
            {k, theta_bar, reconstruct_output(model, h, theta_bar), theta_cov, effective_sample_size(posterior.weights)});
        if (config.snapshot_ensembles) result.trace.snapshots.push_back(posterior);
        result.iterations = k + 1;
        if (quiet_steps >= kConvergenceWindow) {
            result.converged = true;
            break;
        }
    }
    result.estimate.theta = theta_bar;
    result.estimate.state = model.evaluate(theta_bar);
    result.estimate.output = h.apply(result.estimate.state);
    return result;
}

}  // namespace softcon
