// softcon: command-line front end for constrained Bayesian inference runs.
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "softcon/error.hpp"
#include "softcon/experiment.hpp"

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw softcon::Error(softcon::ErrorKind::ConfigError, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_summary(const softcon::RunOutcome& outcome) {
    for (const auto& r : outcome.records) {
        std::cout << r.label << ": theta* = (";
        for (Eigen::Index i = 0; i < r.estimate.theta.size(); ++i)
            std::cout << (i ? ", " : "") << r.estimate.theta(i);
        std::cout << ")  y* = " << r.estimate.output(0) << "  " << softcon::to_string(r.group);
        if (r.map) {
            std::cout << "  map = (";
            for (Eigen::Index i = 0; i < r.map->theta.size(); ++i) std::cout << (i ? ", " : "") << r.map->theta(i);
            std::cout << ")";
        }
        if (outcome.config.method == softcon::Method::Enkf)
            std::cout << "  iterations = " << r.iterations << (r.converged ? " (converged)" : "");
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian inverse problems with soft constraints: exact sampling and constrained EnKF"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file or a preset");
    std::string config_path, preset_name, out_dir;
    std::optional<std::uint64_t> seed;
    bool snapshots = false, perturbed = false;
    auto* config_opt = run_cmd->add_option("--config", config_path, "Run configuration JSON");
    run_cmd->add_option("--preset", preset_name, "Built-in experiment")->excludes(config_opt);
    run_cmd->add_option("--seed", seed, "Override the configured seed");
    run_cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    run_cmd->add_flag("--snapshot-ensembles", snapshots, "Write per-iteration ensemble CSVs");
    run_cmd->add_flag("--perturbed-obs", perturbed, "Perturb observations per member in the Kalman update");

    auto* preset_cmd = app.add_subcommand("preset", "Print a preset's configuration JSON");
    std::string show_name;
    preset_cmd->add_option("name", show_name, "Preset name")->required();

    auto* contour_cmd = app.add_subcommand("contour", "Write the benchmark cost function on a grid as CSV");
    softcon::GridSpec grid;
    double observed = softcon::kSyntheticObserved;
    std::string contour_out;
    contour_cmd->add_option("--theta1-min", grid.theta1_min);
    contour_cmd->add_option("--theta1-max", grid.theta1_max);
    contour_cmd->add_option("--theta2-min", grid.theta2_min);
    contour_cmd->add_option("--theta2-max", grid.theta2_max);
    contour_cmd->add_option("--theta1-points", grid.theta1_points);
    contour_cmd->add_option("--theta2-points", grid.theta2_points);
    contour_cmd->add_option("--observed", observed, "Observed output");
    contour_cmd->add_option("--out", contour_out, "CSV path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*preset_cmd) {
            std::cout << softcon::to_json(softcon::preset(show_name)).dump(2) << "\n";
            return 0;
        }
        if (*contour_cmd) {
            const std::string csv = softcon::emit_contour_grid(grid, softcon::Vector::Constant(1, observed));
            if (contour_out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream(contour_out, std::ios::binary) << csv;
            }
            return 0;
        }

        softcon::RunConfig config;
        if (!config_path.empty())
            config = softcon::parse_config(read_file(config_path));
        else if (!preset_name.empty())
            config = softcon::preset(preset_name);
        else
            throw softcon::Error(softcon::ErrorKind::ConfigError, "one of --config or --preset is required");
        if (seed) config.seed = *seed;
        if (!out_dir.empty()) config.output_dir = out_dir;
        if (snapshots) config.snapshot_ensembles = true;
        if (perturbed) config.perturbed_observations = true;

        const softcon::RunOutcome outcome = softcon::execute(config);
        softcon::write_outputs(outcome, config.output_dir);
        print_summary(outcome);
        std::cout << "wrote " << config.output_dir << "/result.json (" << outcome.wall_clock_seconds << " s)\n";
        return 0;
    } catch (const softcon::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_numerical() ? kExitNumerical : kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
