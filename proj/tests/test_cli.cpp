#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SOFTCON_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("softcon_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("malformed config exits 2 and writes nothing") {
    const fs::path dir = scratch("malformed");
    write(dir / "bad.json", "{ \"method\": \"exact\", ");
    CHECK(run_cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "out").string()) == 2);
    CHECK(!fs::exists(dir / "out"));
}

TEST_CASE("config errors exit 2") {
    const fs::path dir = scratch("config_errors");
    write(dir / "unknown.json", R"({"method":"exact","model":"synthetic","surprise":true})");
    CHECK(run_cli("run --config " + (dir / "unknown.json").string() + " --out " + (dir / "o").string()) == 2);
    CHECK(run_cli("run --preset no-such-preset --out " + (dir / "o").string()) == 2);
    CHECK(run_cli("run --config " + (dir / "missing.json").string()) == 2);
    CHECK(run_cli("run") == 2);
    CHECK(run_cli("--bogus-flag") == 2);
    CHECK(!fs::exists(dir / "o"));
}

TEST_CASE("numerical failure exits 1") {
    const fs::path dir = scratch("numerical");
    // Single sample at (-1,-1), residual -4 under variance 1e-308: the constraint
    // log-likelihood is -inf and no weight survives.
    write(dir / "zero.json", R"({
      "method": "exact", "model": "synthetic",
      "constraints": [{"name": "synthetic-log-equality", "variance": 1e-308}],
      "prior": {"mean": [-1, -1], "cov": [[0, 0], [0, 0]]},
      "data": {"mean": [-1], "cov": [[0.01]]},
      "ensemble_size": 1, "seed": 3
    })");
    CHECK(run_cli("run --config " + (dir / "zero.json").string() + " --out " + (dir / "o").string()) == 1);
}

TEST_CASE("preset run writes result and samples, reproducibly") {
    const fs::path dir = scratch("preset");
    CHECK(run_cli("run --preset table1 --out " + (dir / "a").string()) == 0);
    CHECK(run_cli("run --preset table1 --out " + (dir / "b").string()) == 0);
    REQUIRE(fs::exists(dir / "a" / "samples.csv"));
    CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
    CHECK(fs::exists(dir / "a" / "timing.json"));
    const auto result = nlohmann::json::parse(slurp(dir / "a" / "result.json"));
    const auto repeat = nlohmann::json::parse(slurp(dir / "b" / "result.json"));
    CHECK(result["runs"].dump() == repeat["runs"].dump());
    CHECK(result["config"]["output_dir"] == (dir / "a").string());
    CHECK(result["config"]["seed"] == 1);

    CHECK(run_cli("run --preset table1 --seed 5 --out " + (dir / "c").string()) == 0);
    const auto seeded = nlohmann::json::parse(slurp(dir / "c" / "result.json"));
    CHECK(seeded["config"]["seed"] == 5);
    CHECK(seeded["runs"] != result["runs"]);
}

TEST_CASE("config file run with flags, and closure through the echoed config") {
    const fs::path dir = scratch("config_run");
    REQUIRE(run_cli("preset fig3-sweep > /dev/null") == 0);
    nlohmann::json cfg = nlohmann::json::parse(R"({
      "method": "enkf", "model": "synthetic",
      "constraints": [{"name": "synthetic-log-equality", "variance": 2.0}],
      "prior": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]},
      "data": {"mean": [-1], "cov": [[0.01]]},
      "ensemble_size": 50, "max_iterations": 5, "seed": 11,
      "initial_guesses": [[0, 0]]
    })");
    write(dir / "cfg.json", cfg.dump());
    CHECK(run_cli("run --config " + (dir / "cfg.json").string() + " --out " + (dir / "a").string() +
                  " --snapshot-ensembles --perturbed-obs") == 0);
    CHECK(fs::exists(dir / "a" / "trace_0.csv"));
    CHECK(fs::exists(dir / "a" / "ensemble_0.csv"));
    const auto result = nlohmann::json::parse(slurp(dir / "a" / "result.json"));
    CHECK(result["config"]["perturbed_observations"] == true);
    CHECK(result["config"]["snapshot_ensembles"] == true);

    write(dir / "echo.json", result["config"].dump());
    CHECK(run_cli("run --config " + (dir / "echo.json").string() + " --out " + (dir / "b").string()) == 0);
    const auto rerun = nlohmann::json::parse(slurp(dir / "b" / "result.json"));
    CHECK(rerun["runs"] == result["runs"]);
}

TEST_CASE("contour subcommand") {
    const fs::path dir = scratch("contour");
    CHECK(run_cli("contour --theta1-min -1 --theta1-max 1 --theta2-min -1 --theta2-max 1 --theta1-points 3 "
                  "--theta2-points 3 --out " +
                  (dir / "c.csv").string()) == 0);
    const std::string csv = slurp(dir / "c.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}
