#include "softcon/experiment.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "softcon/error.hpp"

namespace softcon {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
    throw Error(ErrorKind::ConfigError, field + ": " + message);
}

json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

double read_number(const json& j, const std::string& field) {
    if (!j.is_number()) config_error(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) config_error(field, "must be finite");
    return v;
}

std::size_t read_count(const json& j, const std::string& field) {
    if (!j.is_number_unsigned()) config_error(field, "expected a nonnegative integer");
    return j.get<std::size_t>();
}

bool read_bool(const json& j, const std::string& field) {
    if (!j.is_boolean()) config_error(field, "expected true or false");
    return j.get<bool>();
}

std::string read_string(const json& j, const std::string& field) {
    if (!j.is_string()) config_error(field, "expected a string");
    return j.get<std::string>();
}

Vector read_vector(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) config_error(field, "expected a nonempty array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = read_number(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

Matrix read_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) config_error(field, "expected a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::string row_field = field + "[" + std::to_string(r) + "]";
        const Vector row = read_vector(j[static_cast<std::size_t>(r)], row_field);
        if (r == 0) m.resize(rows, row.size());
        if (row.size() != m.cols()) config_error(row_field, "ragged matrix row");
        m.row(r) = row.transpose();
    }
    return m;
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!names.count(it.key())) config_error(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) config_error(where.empty() ? key : where + "." + key, "missing required field");
    return j.at(key);
}

GaussianSpec read_gaussian(const json& j, const std::string& field) {
    if (!j.is_object()) config_error(field, "expected an object with mean and cov");
    reject_unknown(j, field, {"mean", "cov"});
    GaussianSpec g(read_vector(require(j, "mean", field), field + ".mean"),
                   read_matrix(require(j, "cov", field), field + ".cov"));
    try {
        g.validate();
    } catch (const Error& e) {
        config_error(field + ".cov", e.what());
    }
    return g;
}

std::string method_name(Method m) { return m == Method::Exact ? "exact" : "enkf"; }
std::string state_name(ConstraintState s) { return s == ConstraintState::Member ? "member" : "forward"; }

json point_json(const PointEstimate& p) {
    return {{"theta", vector_json(p.theta)}, {"state", vector_json(p.state)}, {"output", vector_json(p.output)}};
}

json diagnostics_json(const LikelihoodDiagnostics& d) {
    return {{"evaluation_errors", d.evaluation_errors}, {"non_positive_disjunctions", d.non_positive_disjunctions}};
}

ConstraintSet build_constraints(const RunConfig& config) {
    ConstraintSet set;
    for (const auto& c : config.constraints) set.add(make_constraint(c.name, c.variance));
    return set;
}

std::string guess_label(const Vector& g) {
    std::string s = "theta0=(";
    for (Eigen::Index i = 0; i < g.size(); ++i) s += (i ? "," : "") + format_double(g(i));
    return s + ")";
}

RunConfig base_enkf(double prior_var, std::optional<double> constraint_var, std::size_t ensemble_size) {
    RunConfig c;
    c.method = Method::Enkf;
    c.prior_mean = Vector::Zero(2);
    c.prior_cov = prior_var * Matrix::Identity(2, 2);
    c.data_mean = Vector::Constant(1, kSyntheticObserved);
    c.data_cov = Matrix::Constant(1, 1, 0.01);
    if (constraint_var) c.constraints.push_back({"synthetic-log-equality", *constraint_var});
    c.ensemble_size = ensemble_size;
    c.max_iterations = 1000;
    c.seed = 1;
    for (double v : {-2.0, 0.0, 2.0}) c.initial_guesses.push_back(Vector::Constant(2, v));
    return c;
}

RunConfig base_exact(bool constrained) {
    RunConfig c;
    c.method = Method::Exact;
    c.prior_mean = Vector::Zero(2);
    c.prior_cov = 3.0 * Matrix::Identity(2, 2);
    c.data_mean = Vector::Constant(1, kSyntheticObserved);
    c.data_cov = Matrix::Constant(1, 1, 0.01);
    if (constrained) c.constraints.push_back({"synthetic-log-equality", 0.5});
    c.ensemble_size = 5000;
    c.seed = 1;
    return c;
}

}  // namespace

json to_json(const RunConfig& c) {
    json constraints = json::array();
    for (const auto& t : c.constraints) constraints.push_back({{"name", t.name}, {"variance", t.variance}});
    json guesses = json::array();
    for (const auto& g : c.initial_guesses) guesses.push_back(vector_json(g));
    return {
        {"method", method_name(c.method)},
        {"model", c.model},
        {"constraints", constraints},
        {"prior", {{"mean", vector_json(c.prior_mean)}, {"cov", matrix_json(c.prior_cov)}}},
        {"data", {{"mean", vector_json(c.data_mean)}, {"cov", matrix_json(c.data_cov)}}},
        {"ensemble_size", c.ensemble_size},
        {"max_iterations", c.max_iterations},
        {"convergence_tol", c.convergence_tol},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"initial_guesses", guesses},
        {"perturbed_observations", c.perturbed_observations},
        {"snapshot_ensembles", c.snapshot_ensembles},
        {"resample_jitter", c.resample_jitter},
        {"constraint_state", state_name(c.constraint_state)},
        {"classification_tol", c.classification_tol},
    };
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) config_error("<root>", "expected a JSON object");
    reject_unknown(j, "",
                   {"method", "model", "constraints", "prior", "data", "ensemble_size", "max_iterations",
                    "convergence_tol", "seed", "output_dir", "initial_guesses", "perturbed_observations",
                    "snapshot_ensembles", "resample_jitter", "constraint_state", "classification_tol"});
    RunConfig c;
    const std::string method = read_string(require(j, "method", ""), "method");
    if (method == "exact")
        c.method = Method::Exact;
    else if (method == "enkf")
        c.method = Method::Enkf;
    else
        config_error("method", "expected \"exact\" or \"enkf\", got \"" + method + "\"");

    c.model = read_string(require(j, "model", ""), "model");
    std::shared_ptr<const ForwardModel> model;
    try {
        model = make_model(c.model);
    } catch (const Error& e) {
        config_error("model", e.what());
    }
    const ObservationOperator h = make_observation(c.model);

    if (j.contains("constraints")) {
        const json& arr = j.at("constraints");
        if (!arr.is_array()) config_error("constraints", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string f = "constraints[" + std::to_string(i) + "]";
            if (!arr[i].is_object()) config_error(f, "expected an object with name and variance");
            reject_unknown(arr[i], f, {"name", "variance"});
            ConstraintChoice choice{read_string(require(arr[i], "name", f), f + ".name"),
                                    read_number(require(arr[i], "variance", f), f + ".variance")};
            try {
                make_constraint(choice.name, choice.variance);
            } catch (const Error& e) {
                config_error(f, e.what());
            }
            c.constraints.push_back(choice);
        }
    }

    const GaussianSpec prior = read_gaussian(require(j, "prior", ""), "prior");
    if (prior.dim() != model->param_dim())
        config_error("prior.mean", "expected " + std::to_string(model->param_dim()) + " entries");
    c.prior_mean = prior.mean;
    c.prior_cov = prior.cov;

    const GaussianSpec data = read_gaussian(require(j, "data", ""), "data");
    if (data.dim() != h.output_dim())
        config_error("data.mean", "expected " + std::to_string(h.output_dim()) + " entries");
    try {
        cholesky(data.cov);
    } catch (const Error& e) {
        config_error("data.cov", e.what());
    }
    c.data_mean = data.mean;
    c.data_cov = data.cov;

    c.ensemble_size = read_count(require(j, "ensemble_size", ""), "ensemble_size");
    if (c.ensemble_size < (c.method == Method::Enkf ? 2u : 1u))
        config_error("ensemble_size", c.method == Method::Enkf ? "must be at least 2" : "must be at least 1");
    c.seed = read_count(require(j, "seed", ""), "seed");

    if (j.contains("max_iterations")) c.max_iterations = read_count(j.at("max_iterations"), "max_iterations");
    if (c.max_iterations < 1) config_error("max_iterations", "must be at least 1");
    if (j.contains("convergence_tol")) c.convergence_tol = read_number(j.at("convergence_tol"), "convergence_tol");
    if (c.convergence_tol < 0.0) config_error("convergence_tol", "must be nonnegative");
    if (j.contains("output_dir")) c.output_dir = read_string(j.at("output_dir"), "output_dir");
    if (j.contains("initial_guesses")) {
        const json& arr = j.at("initial_guesses");
        if (!arr.is_array()) config_error("initial_guesses", "expected an array of parameter vectors");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string f = "initial_guesses[" + std::to_string(i) + "]";
            Vector g = read_vector(arr[i], f);
            if (g.size() != model->param_dim())
                config_error(f, "expected " + std::to_string(model->param_dim()) + " entries");
            c.initial_guesses.push_back(std::move(g));
        }
    }
    if (j.contains("perturbed_observations"))
        c.perturbed_observations = read_bool(j.at("perturbed_observations"), "perturbed_observations");
    if (j.contains("snapshot_ensembles"))
        c.snapshot_ensembles = read_bool(j.at("snapshot_ensembles"), "snapshot_ensembles");
    if (j.contains("resample_jitter")) c.resample_jitter = read_number(j.at("resample_jitter"), "resample_jitter");
    if (c.resample_jitter < 0.0) config_error("resample_jitter", "must be nonnegative");
    if (j.contains("constraint_state")) {
        const std::string s = read_string(j.at("constraint_state"), "constraint_state");
        if (s == "member")
            c.constraint_state = ConstraintState::Member;
        else if (s == "forward")
            c.constraint_state = ConstraintState::Forward;
        else
            config_error("constraint_state", "expected \"member\" or \"forward\"");
    }
    if (j.contains("classification_tol"))
        c.classification_tol = read_number(j.at("classification_tol"), "classification_tol");
    if (!(c.classification_tol > 0.0)) config_error("classification_tol", "must be positive");
    return c;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorKind::ConfigError,
                    "line " + std::to_string(line) + ", column " + std::to_string(column) + ": malformed JSON");
    }
    return config_from_json(j);
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"table1", "table1-noconstraint", "table2",
                                                "table3", "table4",              "fig3-sweep"};
    return names;
}

RunConfig preset(const std::string& name) {
    if (name == "table1") return base_exact(true);
    if (name == "table1-noconstraint") return base_exact(false);
    // The constrained tables use a larger ensemble; the final estimate's Monte Carlo
    // jitter around (1,1) shrinks roughly as 1/sqrt(J).
    if (name == "table2") return base_enkf(1.0, 2.0, 2000);
    if (name == "table3") return base_enkf(3.0, 2.0, 2000);
    if (name == "table4") return base_enkf(1.0, 1.0, 2000);
    if (name == "fig3-sweep") return base_enkf(1.0, std::nullopt, 500);
    throw Error(ErrorKind::UnknownPreset, "'" + name + "'");
}

RunOutcome execute(const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const auto model = make_model(config.model);
    const ObservationOperator h = make_observation(config.model);
    const ConstraintSet constraints = build_constraints(config);
    const PriorSpec prior{GaussianSpec(config.prior_mean, config.prior_cov)};
    const DataSpec data{config.data_mean, config.data_cov};

    RunOutcome outcome;
    outcome.config = config;
    if (config.method == Method::Exact) {
        RngStream rng = RngStream::derive(config.seed, "exact-prior");
        const PriorSamples draws = draw_prior_samples(prior, *model, config.ensemble_size, rng);
        WeightedSamples samples = compute_posterior_weights(draws, prior, data, h, constraints);
        const ExactEstimate est = estimate(samples, *model, h);

        RunRecord r;
        r.label = "exact";
        r.estimate = est.expectation;
        r.group = classify_minimum(est.expectation.theta, config.classification_tol);
        r.map = est.map;
        r.map_index = est.map_index;
        r.map_group = classify_minimum(est.map.theta, config.classification_tol);
        r.ess_min = r.ess_mean = r.ess_final = effective_sample_size(samples.posterior_weights);
        r.diagnostics = samples.diagnostics;
        outcome.records.push_back(std::move(r));
        outcome.samples = std::move(samples);
    } else {
        std::vector<std::optional<Vector>> guesses;
        for (const auto& g : config.initial_guesses) guesses.emplace_back(g);
        if (guesses.empty()) guesses.emplace_back(std::nullopt);
        for (const auto& guess : guesses) {
            EnkfConfig ec;
            ec.prior = prior;
            ec.data = data;
            ec.constraints = constraints;
            ec.ensemble_size = config.ensemble_size;
            ec.max_iterations = config.max_iterations;
            ec.convergence_tol = config.convergence_tol;
            ec.seed = config.seed;
            if (guess) ec.initial_guess = *guess;
            ec.perturbed_observations = config.perturbed_observations;
            ec.resample_jitter = config.resample_jitter;
            ec.snapshot_ensembles = config.snapshot_ensembles;
            ec.constraint_state = config.constraint_state;
            EnkfResult res = run(ec, *model, h);

            RunRecord r;
            r.label = guess ? guess_label(*guess) : "prior-mean";
            r.initial_guess = guess;
            r.estimate = res.estimate;
            r.group = classify_minimum(res.estimate.theta, config.classification_tol);
            r.iterations = res.iterations;
            r.converged = res.converged;
            double sum = 0.0;
            r.ess_min = std::numeric_limits<double>::infinity();
            for (const auto& rec : res.trace.records) {
                r.ess_min = std::min(r.ess_min, rec.ess);
                sum += rec.ess;
            }
            r.ess_mean = sum / static_cast<double>(res.trace.records.size());
            r.ess_final = res.trace.records.back().ess;
            r.diagnostics = res.diagnostics;
            outcome.records.push_back(std::move(r));
            outcome.enkf_runs.push_back(std::move(res));
        }
    }
    outcome.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return outcome;
}

json result_json(const RunOutcome& outcome) {
    json runs = json::array();
    for (std::size_t i = 0; i < outcome.records.size(); ++i) {
        const RunRecord& r = outcome.records[i];
        json run = {
            {"label", r.label},
            {"estimate", point_json(r.estimate)},
            {"group", to_string(r.group)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"ess", {{"min", r.ess_min}, {"mean", r.ess_mean}, {"final", r.ess_final}}},
            {"diagnostics", diagnostics_json(r.diagnostics)},
        };
        if (r.initial_guess) run["initial_guess"] = vector_json(*r.initial_guess);
        if (r.map) {
            run["map"] = point_json(*r.map);
            run["map"]["index"] = *r.map_index;
            run["map"]["group"] = to_string(*r.map_group);
        }
        if (outcome.config.method == Method::Enkf) run["trace_file"] = "trace_" + std::to_string(i) + ".csv";
        runs.push_back(std::move(run));
    }
    return {{"config", to_json(outcome.config)}, {"method", method_name(outcome.config.method)}, {"runs", runs}};
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string samples_csv(const WeightedSamples& samples) {
    std::ostringstream os;
    const Eigen::Index dp = samples.params.empty() ? 0 : samples.params.front().size();
    const Eigen::Index dx = samples.states.empty() ? 0 : samples.states.front().size();
    for (Eigen::Index i = 0; i < dp; ++i) os << "theta_" << i + 1 << ",";
    for (Eigen::Index i = 0; i < dx; ++i) os << "x_" << i + 1 << ",";
    os << "log_data,log_constraint,weight\n";
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        for (Eigen::Index i = 0; i < dp; ++i) os << format_double(samples.params[j](i)) << ",";
        for (Eigen::Index i = 0; i < dx; ++i) os << format_double(samples.states[j](i)) << ",";
        os << format_double(samples.log_data(k)) << "," << format_double(samples.log_constraint(k)) << ","
           << format_double(samples.posterior_weights(k)) << "\n";
    }
    return os.str();
}

std::string trace_csv(const IterationTrace& trace, double classification_tol) {
    std::ostringstream os;
    if (trace.records.empty()) return os.str();
    const auto& first = trace.records.front();
    const Eigen::Index dp = first.theta_bar.size();
    const Eigen::Index dy = first.output.size();
    os << "iteration";
    for (Eigen::Index i = 0; i < dp; ++i) os << ",theta_bar_" << i + 1;
    for (Eigen::Index i = 0; i < dy; ++i) os << ",output_" << i + 1;
    os << ",ess";
    for (Eigen::Index r = 0; r < dp; ++r)
        for (Eigen::Index c = 0; c < dp; ++c) os << ",cov_" << r + 1 << c + 1;
    os << ",group\n";
    for (const auto& rec : trace.records) {
        os << rec.iteration;
        for (Eigen::Index i = 0; i < dp; ++i) os << "," << format_double(rec.theta_bar(i));
        for (Eigen::Index i = 0; i < dy; ++i) os << "," << format_double(rec.output(i));
        os << "," << format_double(rec.ess);
        for (Eigen::Index r = 0; r < dp; ++r)
            for (Eigen::Index c = 0; c < dp; ++c) os << "," << format_double(rec.theta_cov(r, c));
        const std::string group = dp == 2 ? to_string(classify_minimum(rec.theta_bar, classification_tol)) : "";
        os << "," << group << "\n";
    }
    return os.str();
}

std::string snapshots_csv(const IterationTrace& trace) {
    std::ostringstream os;
    if (trace.snapshots.empty()) return os.str();
    const Ensemble& first = trace.snapshots.front();
    os << "iteration,member";
    for (Eigen::Index i = 0; i < first.param_dim; ++i) os << ",theta_" << i + 1;
    for (Eigen::Index i = 0; i < first.state_dim(); ++i) os << ",x_" << i + 1;
    os << ",weight\n";
    for (std::size_t k = 0; k < trace.snapshots.size(); ++k) {
        const Ensemble& e = trace.snapshots[k];
        for (std::size_t j = 0; j < e.size(); ++j) {
            os << k << "," << j;
            const auto col = e.members.col(static_cast<Eigen::Index>(j));
            for (Eigen::Index i = 0; i < col.size(); ++i) os << "," << format_double(col(i));
            os << "," << format_double(e.weights(static_cast<Eigen::Index>(j))) << "\n";
        }
    }
    return os.str();
}

std::string emit_contour_grid(const GridSpec& grid, const Vector& observed) {
    if (grid.theta1_points < 1 || grid.theta2_points < 1)
        throw Error(ErrorKind::ConfigError, "grid needs at least one point per axis");
    if (!(grid.theta1_max >= grid.theta1_min) || !(grid.theta2_max >= grid.theta2_min))
        throw Error(ErrorKind::ConfigError, "grid bounds are inverted");
    auto axis = [](double lo, double hi, std::size_t n, std::size_t i) {
        return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    std::ostringstream os;
    os << "theta_1,theta_2,cost\n";
    Vector theta(2);
    for (std::size_t a = 0; a < grid.theta1_points; ++a) {
        for (std::size_t b = 0; b < grid.theta2_points; ++b) {
            theta << axis(grid.theta1_min, grid.theta1_max, grid.theta1_points, a),
                axis(grid.theta2_min, grid.theta2_max, grid.theta2_points, b);
            os << format_double(theta(0)) << "," << format_double(theta(1)) << ","
               << format_double(cost_function(theta, observed)) << "\n";
        }
    }
    return os.str();
}

std::vector<std::filesystem::path> write_outputs(const RunOutcome& outcome, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& body) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary);
        out << body;
        if (!out) throw std::runtime_error("cannot write " + path.string());
        written.push_back(path);
    };
    put("result.json", result_json(outcome).dump(2) + "\n");
    put("timing.json", json{{"wall_clock_seconds", outcome.wall_clock_seconds}}.dump(2) + "\n");
    if (outcome.samples) put("samples.csv", samples_csv(*outcome.samples));
    for (std::size_t i = 0; i < outcome.enkf_runs.size(); ++i) {
        const auto& trace = outcome.enkf_runs[i].trace;
        put("trace_" + std::to_string(i) + ".csv", trace_csv(trace, outcome.config.classification_tol));
        if (!trace.snapshots.empty()) put("ensemble_" + std::to_string(i) + ".csv", snapshots_csv(trace));
    }
    return written;
}

}  // namespace softcon
