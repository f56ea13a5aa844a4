#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "softcon/error.hpp"
#include "softcon/experiment.hpp"

namespace py = pybind11;
using namespace softcon;

namespace {

PyObject* base_error = nullptr;
PyObject* config_error = nullptr;
PyObject* numerical_error = nullptr;

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> to_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }

py::object from_json(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json to_json_value(const py::object& obj) {
    if (py::isinstance<py::str>(obj)) return nlohmann::json::parse(obj.cast<std::string>());
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

RunConfig config_from(const py::object& obj) {
    if (py::isinstance<py::str>(obj)) return parse_config(obj.cast<std::string>());
    return config_from_json(to_json_value(obj));
}

}  // namespace

PYBIND11_MODULE(softcon, m) {
    m.doc() = "Soft-constrained Bayesian parameter estimation: exact importance sampling and an iterative EnKF.";

    base_error = PyErr_NewException("softcon.Error", PyExc_RuntimeError, nullptr);
    config_error = PyErr_NewException("softcon.ConfigError", base_error, nullptr);
    numerical_error = PyErr_NewException("softcon.NumericalError", base_error, nullptr);
    m.add_object("Error", py::handle(base_error));
    m.add_object("ConfigError", py::handle(config_error));
    m.add_object("NumericalError", py::handle(numerical_error));
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyObject* type = base_error;
            if (e.is_numerical())
                type = numerical_error;
            else if (e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::UnknownPreset)
                type = config_error;
            PyErr_SetString(type, e.what());
        }
    });

    m.def("synthetic_forward", [](const std::vector<double>& theta) { return to_list(synthetic_forward(to_vector(theta))); },
          py::arg("theta"), "F(theta) for the two-parameter synthetic benchmark.");
    m.def("cost_function",
          [](const std::vector<double>& theta, double observed) {
              return cost_function(to_vector(theta), Vector::Constant(1, observed));
          },
          py::arg("theta"), py::arg("observed") = kSyntheticObserved);
    m.def("classify_minimum",
          [](const std::vector<double>& theta, double tol) { return std::string(to_string(classify_minimum(to_vector(theta), tol))); },
          py::arg("theta"), py::arg("tol") = 0.1);
    m.def("preset_names", &preset_names);
    m.def("preset", [](const std::string& name) { return from_json(to_json(preset(name))); }, py::arg("name"));
    m.def("validate_config", [](const py::object& config) { return from_json(to_json(config_from(config))); },
          py::arg("config"), "Parse and validate a config (dict or JSON text); returns the normalized dict.");
    m.def("run",
          [](const py::object& config) {
              const RunConfig c = config_from(config);
              RunOutcome out;
              {
                  py::gil_scoped_release release;
                  out = execute(c);
              }
              return from_json(result_json(out));
          },
          py::arg("config"), "Run an experiment from a config dict, JSON text, and return the result document.");
    m.def("run_preset",
          [](const std::string& name, std::optional<std::uint64_t> seed) {
              RunConfig c = preset(name);
              if (seed) c.seed = *seed;
              RunOutcome out;
              {
                  py::gil_scoped_release release;
                  out = execute(c);
              }
              return from_json(result_json(out));
          },
          py::arg("name"), py::arg("seed") = py::none());
    m.def("contour",
          [](double t1min, double t1max, double t2min, double t2max, std::size_t n1, std::size_t n2, double observed) {
              GridSpec g{t1min, t1max, t2min, t2max, n1, n2};
              return emit_contour_grid(g, Vector::Constant(1, observed));
          },
          py::arg("theta1_min") = -3.0, py::arg("theta1_max") = 3.0, py::arg("theta2_min") = -3.0,
          py::arg("theta2_max") = 3.0, py::arg("theta1_points") = 101, py::arg("theta2_points") = 101,
          py::arg("observed") = kSyntheticObserved, "Cost function on a grid, as CSV text.");
}
