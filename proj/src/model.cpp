#include "softcon/model.hpp"

#include <cmath>

#include "softcon/error.hpp"

namespace softcon {

Vector ObservationOperator::apply(const Vector& state) const {
    if (state.size() != h_.cols())
        throw Error(ErrorKind::DimensionMismatch, "state dim " + std::to_string(state.size()) +
                                                      " vs operator columns " + std::to_string(h_.cols()));
    return h_ * state;
}

Vector SyntheticModel::evaluate(const Vector& theta) const { return synthetic_forward(theta); }

Vector synthetic_forward(const Vector& theta) {
    if (theta.size() != 2) throw Error(ErrorKind::DimensionMismatch, "synthetic model takes 2 parameters");
    const double a = theta(0), b = theta(1);
    Vector x(2);
    x << std::exp(-(a + 1.0) * (a + 1.0) - (b + 1.0) * (b + 1.0)),
        std::exp(-(a - 1.0) * (a - 1.0) - (b - 1.0) * (b - 1.0));
    return x;
}

ObservationOperator synthetic_observation() {
    Matrix h(1, 2);
    h << -1.5, -1.0;
    return ObservationOperator(h);
}

double spurious_minimum_radius() { return std::sqrt(std::log(1.5)); }

Vector reconstruct_output(const ForwardModel& model, const ObservationOperator& h, const Vector& theta) {
    if (theta.size() != model.param_dim())
        throw Error(ErrorKind::DimensionMismatch, "parameter dim does not match model");
    if (h.state_dim() != model.state_dim())
        throw Error(ErrorKind::DimensionMismatch, "observation operator does not match model state");
    return h.apply(model.evaluate(theta));
}

double cost_function(const Vector& theta, const Vector& observed) {
    static const SyntheticModel model;
    static const ObservationOperator h = synthetic_observation();
    return (observed - reconstruct_output(model, h, theta)).squaredNorm();
}

std::string to_string(MinimumGroup group) {
    switch (group) {
        case MinimumGroup::GroupI: return "GroupI";
        case MinimumGroup::GroupII: return "GroupII";
        case MinimumGroup::Neither: return "Neither";
    }
    return "Neither";
}

MinimumGroup classify_minimum(const Vector& theta, double tol) {
    if (theta.size() != 2) throw Error(ErrorKind::DimensionMismatch, "classification expects 2 parameters");
    const Vector center_one = Vector::Constant(2, 1.0);
    const Vector center_two = Vector::Constant(2, -1.0);
    if ((theta - center_one).norm() <= tol) return MinimumGroup::GroupI;
    if (std::abs((theta - center_two).norm() - spurious_minimum_radius()) <= tol) return MinimumGroup::GroupII;
    return MinimumGroup::Neither;
}

std::shared_ptr<const ForwardModel> make_model(const std::string& name) {
    if (name == "synthetic") return std::make_shared<SyntheticModel>();
    throw Error(ErrorKind::ConfigError, "unknown model '" + name + "'");
}

ObservationOperator make_observation(const std::string& model_name) {
    if (model_name == "synthetic") return synthetic_observation();
    throw Error(ErrorKind::ConfigError, "unknown model '" + model_name + "'");
}

}  // namespace softcon
