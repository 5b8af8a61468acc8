#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dirac_thermo/errors.hpp"
#include "dirac_thermo/run_config.hpp"

using namespace dirac_thermo;
using nlohmann::json;

namespace {

json base_config() {
    return json{
        {"model", {{"name", "lcr"}, {"params", {{"V", 0.0}}}}},
        {"initial", {{"q", {0.0, 0.05, 0.0, 0.0}}, {"v", {0.0, -0.1, 0.0, 0.1}}, {"S", 0.0}}},
        {"t_span", {0.0, 0.05}},
        {"dt", 1e-3},
    };
}

std::string expect_config_error(const json& j) {
    try {
        parse_run_config(j);
    } catch (const ConfigError& e) {
        return e.key();
    }
    FAIL("expected ConfigError");
    return {};
}

/// Unique scratch directory; removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("dirac_thermo_test_" + std::to_string(std::rand()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xffff));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
    const RunConfig c = parse_run_config(base_config());
    CHECK(c.model_name == "lcr");
    CHECK(c.q0.size() == 4);
    CHECK(c.dt == 1e-3);
    CHECK(c.scheme == Scheme::rk4);
    CHECK(c.options.projection);
    CHECK_FALSE(c.has_N);
    CHECK(c.trajectory_path.empty());
}

TEST_CASE("config validation names the offending key") {
    SUBCASE("missing model") {
        json j = base_config();
        j.erase("model");
        CHECK(expect_config_error(j) == "model");
    }
    SUBCASE("zero dt") {
        json j = base_config();
        j["dt"] = 0.0;
        CHECK(expect_config_error(j) == "dt");
    }
    SUBCASE("dt exceeding the span") {
        json j = base_config();
        j["dt"] = 1.0;
        CHECK(expect_config_error(j) == "dt");
    }
    SUBCASE("reversed t_span") {
        json j = base_config();
        j["t_span"] = {1.0, 0.0};
        CHECK(expect_config_error(j) == "t_span");
    }
    SUBCASE("unknown top-level key") {
        json j = base_config();
        j["driftwood"] = 1;
        CHECK(expect_config_error(j) == "driftwood");
    }
    SUBCASE("unknown scheme") {
        json j = base_config();
        j["scheme"] = "leapfrog";
        CHECK(expect_config_error(j) == "scheme");
    }
    SUBCASE("mistyped initial entry") {
        json j = base_config();
        j["initial"]["q"][2] = "oops";
        CHECK(expect_config_error(j) == "initial.q[2]");
    }
    SUBCASE("unknown tolerance") {
        json j = base_config();
        j["tolerances"] = {{"warp_factor", 9.0}};
        CHECK(expect_config_error(j) == "tolerances.warp_factor");
    }
    SUBCASE("N on a closed model is rejected at execution") {
        json j = base_config();
        j["initial"]["N"] = 0.002;
        const RunConfig c = parse_run_config(j);
        CHECK_THROWS_AS(execute_run(c), ConfigError);
    }
    SUBCASE("open model requires N") {
        json j = base_config();
        j["model"] = {{"name", "open_piston"}};
        j["initial"] = {{"q", {0.5}}, {"v", {0.0}}, {"S", 0.0}};
        const RunConfig c = parse_run_config(j);
        CHECK_THROWS_AS(execute_run(c), ConfigError);
    }
    SUBCASE("initial vector length must match the model") {
        json j = base_config();
        j["initial"]["q"] = {0.0, 0.0};
        j["initial"]["v"] = {0.0, 0.0};
        const RunConfig c = parse_run_config(j);
        CHECK_THROWS_AS(execute_run(c), ConfigError);
    }
}

TEST_CASE("tolerance overrides reach the solver options") {
    json j = base_config();
    j["tolerances"] = {{"newton_tol", 1e-8}, {"halving_max_depth", 2}};
    j["projection"] = false;
    const RunConfig c = parse_run_config(j);
    CHECK(c.options.newton_tol == 1e-8);
    CHECK(c.options.halving_max_depth == 2);
    CHECK_FALSE(c.options.projection);
}

TEST_CASE("executed run writes the report and a deterministic trajectory") {
    TempDir dir;
    json j = base_config();
    j["t_span"] = {0.0, 0.2};
    j["outputs"] = {{"trajectory", (dir.path / "a.csv").string()},
                    {"report", (dir.path / "a.json").string()}};
    RunConfig c = parse_run_config(j);
    const RunArtifacts first = execute_run(c);
    CHECK(first.exit_code == 0);
    CHECK(first.report.contains("final_state"));
    CHECK(first.report.contains("max_energy_defect"));
    CHECK(first.report.contains("min_entropy_increment"));
    CHECK(first.report.contains("max_dirac_residual"));
    CHECK(first.report.contains("max_constraint_residual"));
    CHECK(first.report.size() == 5);
    CHECK(first.report["max_energy_defect"].get<double>() <= 1e-8);
    CHECK(first.report["min_entropy_increment"].get<double>() >= -1e-12);

    c.trajectory_path = (dir.path / "b.csv").string();
    c.report_path.clear();
    const RunArtifacts second = execute_run(c);
    CHECK(second.exit_code == 0);
    CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));
    CHECK_FALSE(slurp(dir.path / "a.csv").empty());
}

TEST_CASE("open model execution reports the final mole number") {
    TempDir dir;
    json j{
        {"model", {{"name", "open_piston"}}},
        {"initial", {{"q", {0.5}}, {"v", {0.0}}, {"S", 0.0}, {"N", 0.002}}},
        {"t_span", {0.0, 0.05}},
        {"dt", 1e-3},
        {"outputs", {{"trajectory", (dir.path / "open.csv").string()}}},
    };
    const RunArtifacts run = execute_run(parse_run_config(j));
    CHECK(run.exit_code == 0);
    CHECK(run.report["final_state"].contains("N"));
    const std::string csv = slurp(dir.path / "open.csv");
    CHECK(csv.rfind("t,q_1,v_1,S,p_1,E,Sdot,dirac_residual,power_ext,N,I,P_W,P_H,P_M,p_time\n",
                    0) == 0);
}

TEST_CASE("solver failure reports exit code 2 and keeps the partial CSV") {
    TempDir dir;
    // A Newton budget of zero makes every implicit step fail, at the full
    // step and at every halved substep, so the run dies at the first step
    // with the initial sample already exported.
    json j = base_config();
    j["scheme"] = "implicit_midpoint";
    j["tolerances"] = {{"newton_max_iter", 0}};
    j["outputs"] = {{"trajectory", (dir.path / "partial.csv").string()}};
    const RunArtifacts run = execute_run(parse_run_config(j));
    CHECK(run.exit_code == 2);
    CHECK_FALSE(run.error_message.empty());
    CHECK(run.trajectory.failed);
    CHECK(std::filesystem::exists(dir.path / "partial.csv"));
    CHECK_FALSE(slurp(dir.path / "partial.csv").empty());
}
