#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softcon/enkf.hpp"
#include "softcon/exact.hpp"

namespace softcon {

enum class Method { Exact, Enkf };

struct ConstraintChoice {
    std::string name;
    double variance = 1.0;
};

/// Serialized description of one experiment. Round-trips through JSON; the
/// parser rejects unknown fields.
struct RunConfig {
    Method method = Method::Exact;
    std::string model = "synthetic";
    std::vector<ConstraintChoice> constraints;
    Vector prior_mean;
    Matrix prior_cov;
    Vector data_mean;
    Matrix data_cov;
    std::size_t ensemble_size = 500;
    std::size_t max_iterations = 1000;
    double convergence_tol = 1e-6;
    std::uint64_t seed = 1;
    std::string output_dir = "softcon-out";
    /// EnKF only: one run per initial guess. Empty means a single run from the prior mean.
    std::vector<Vector> initial_guesses;
    bool perturbed_observations = false;
    bool snapshot_ensembles = false;
    double resample_jitter = 0.0;
    ConstraintState constraint_state = ConstraintState::Member;
    double classification_tol = 0.1;
};

nlohmann::json to_json(const RunConfig& config);

/// Throws Error{ConfigError} naming the offending field.
RunConfig config_from_json(const nlohmann::json& j);

/// Parses JSON text; syntax errors report line and column.
RunConfig parse_config(const std::string& text);

const std::vector<std::string>& preset_names();

/// Built-in benchmark settings. Throws Error{UnknownPreset}.
RunConfig preset(const std::string& name);

/// Result of one exact run or one EnKF initial guess.
struct RunRecord {
    std::string label;
    std::optional<Vector> initial_guess;
    PointEstimate estimate;  ///< posterior mean (exact) or final θ̄ (EnKF)
    MinimumGroup group = MinimumGroup::Neither;
    std::optional<PointEstimate> map;  ///< exact only
    std::optional<std::size_t> map_index;
    std::optional<MinimumGroup> map_group;
    std::size_t iterations = 1;
    bool converged = true;
    double ess_min = 0.0;
    double ess_mean = 0.0;
    double ess_final = 0.0;
    LikelihoodDiagnostics diagnostics;
};

struct RunOutcome {
    RunConfig config;
    std::vector<RunRecord> records;
    std::optional<WeightedSamples> samples;  ///< exact only
    std::vector<EnkfResult> enkf_runs;
    double wall_clock_seconds = 0.0;
};

/// Validates and executes the configured method. Library errors propagate.
RunOutcome execute(const RunConfig& config);

/// result JSON: config echo, estimates, groups, iteration counts, ESS summary.
/// Wall-clock time is kept out so identical seeds give identical bytes.
nlohmann::json result_json(const RunOutcome& outcome);

std::string format_double(double v);

/// theta_1..,x_1..,log_data,log_constraint,weight
std::string samples_csv(const WeightedSamples& samples);

/// iteration,theta_bar_*,output_*,ess,cov_ij (row-major),group
std::string trace_csv(const IterationTrace& trace, double classification_tol);

/// iteration,member,theta_*,x_*,weight
std::string snapshots_csv(const IterationTrace& trace);

struct GridSpec {
    double theta1_min = -3.0, theta1_max = 3.0;
    double theta2_min = -3.0, theta2_max = 3.0;
    std::size_t theta1_points = 101, theta2_points = 101;
};

/// theta_1,theta_2,cost over the synthetic benchmark's cost function.
std::string emit_contour_grid(const GridSpec& grid, const Vector& observed);

/// Writes result.json, timing.json and the CSV artifacts into `dir`.
/// Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const RunOutcome& outcome, const std::filesystem::path& dir);

}  // namespace softcon
