#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#ifndef DIRAC_THERMO_CLI_PATH
#error "DIRAC_THERMO_CLI_PATH must point at the dirac-thermo binary"
#endif

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dirac_thermo_cli_" + std::to_string(std::rand()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xffff));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

/// Runs the CLI with the given argument string in `cwd`, capturing streams.
CommandResult run_cli(const std::string& args, const fs::path& cwd,
                      const std::string& env_prefix = "") {
    const fs::path out_file = cwd / "_stdout.txt";
    const fs::path err_file = cwd / "_stderr.txt";
    std::ostringstream cmd;
    cmd << "cd " << cwd << " && " << env_prefix << " " << DIRAC_THERMO_CLI_PATH << " " << args
        << " > " << out_file << " 2> " << err_file;
    const int status = std::system(cmd.str().c_str());
    CommandResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

json lcr_config() {
    return json{
        {"model", {{"name", "lcr"}, {"params", {{"V", 0.0}}}}},
        {"initial", {{"q", {0.0, 0.05, 0.0, 0.0}}, {"v", {0.0, -0.1, 0.0, 0.1}}, {"S", 0.0}}},
        {"t_span", {0.0, 1.0}},
        {"dt", 1e-3},
        {"outputs", {{"trajectory", "trajectory.csv"}, {"report", "report.json"}}},
    };
}

}  // namespace

TEST_CASE("list-models prints the catalog") {
    TempDir dir;
    const CommandResult r = run_cli("list-models", dir.path);
    CHECK(r.exit_code == 0);
    CHECK(r.out == "piston_cylinder\nlcr\nopen_piston\n");
}

TEST_CASE("run produces the report and a byte-identical rerun") {
    TempDir dir;
    spit(dir.path / "config.json", lcr_config().dump(2));
    const CommandResult first = run_cli("run config.json", dir.path);
    REQUIRE(first.exit_code == 0);

    const json report = json::parse(first.out);
    CHECK(report.at("max_energy_defect").get<double>() <= 1e-8);
    CHECK(report.at("min_entropy_increment").get<double>() >= -1e-12);
    CHECK(report.at("max_dirac_residual").get<double>() <= 1e-8);
    CHECK(json::parse(slurp(dir.path / "report.json")) == report);

    const std::string csv = slurp(dir.path / "trajectory.csv");
    CHECK_FALSE(csv.empty());

    TempDir rerun;
    spit(rerun.path / "config.json", lcr_config().dump(2));
    const CommandResult second = run_cli("run config.json", rerun.path);
    REQUIRE(second.exit_code == 0);
    CHECK(slurp(rerun.path / "trajectory.csv") == csv);
}

TEST_CASE("config errors exit 1 and name the key") {
    TempDir dir;

    SUBCASE("zero dt") {
        json cfg = lcr_config();
        cfg["dt"] = 0.0;
        spit(dir.path / "config.json", cfg.dump());
        const CommandResult r = run_cli("run config.json", dir.path);
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("dt") != std::string::npos);
    }

    SUBCASE("rod shorter than crank") {
        json cfg{
            {"model", {{"name", "piston_cylinder"}, {"params", {{"b", 0.1}}}}},
            {"initial", {{"q", {0.5, 0.3}}, {"v", {0.0, 0.0}}, {"S", 0.0}}},
            {"t_span", {0.0, 1.0}},
            {"dt", 1e-3},
        };
        spit(dir.path / "config.json", cfg.dump());
        const CommandResult r = run_cli("run config.json", dir.path);
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("b > a") != std::string::npos);
    }

    SUBCASE("missing config file") {
        const CommandResult r = run_cli("run nowhere.json", dir.path);
        CHECK(r.exit_code == 1);
    }
}

TEST_CASE("check reports verification status through the exit code") {
    TempDir dir;
    const CommandResult ok = run_cli("check lcr --seed 42", dir.path);
    CHECK(ok.exit_code == 0);
    const json report = json::parse(ok.out);
    CHECK(report.at("overall") == true);
    CHECK(report.at("seed") == 42);

    const CommandResult unknown = run_cli("check warp_core", dir.path);
    CHECK(unknown.exit_code == 1);
}

TEST_CASE("sweep expands the grid and aggregates a summary") {
    TempDir dir;
    json cfg = lcr_config();
    cfg["t_span"] = {0.0, 0.05};
    spit(dir.path / "config.json", cfg.dump());
    spit(dir.path / "grid.json", json{{"model.params.R", {0.5, 1.0}}, {"dt", {1e-3}}}.dump());

    const CommandResult r =
        run_cli("sweep config.json --grid grid.json", dir.path, "DIRAC_THERMO_THREADS=2");
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(dir.path / "summary.csv"));
    const std::string summary = slurp(dir.path / "summary.csv");
    CHECK(summary.rfind("dt,model.params.R,final_S,max_energy_defect,exit\n", 0) == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);  // header + 2 runs
    CHECK(fs::exists(dir.path / "run_000" / "trajectory.csv"));
    CHECK(fs::exists(dir.path / "run_000" / "report.json"));
    CHECK(fs::exists(dir.path / "run_001" / "trajectory.csv"));
    CHECK_FALSE(fs::exists(dir.path / "run_002"));
}

TEST_CASE("sweep with a single-cell grid matches a direct run") {
    TempDir dir;
    json cfg = lcr_config();
    cfg["t_span"] = {0.0, 0.05};
    spit(dir.path / "config.json", cfg.dump());
    spit(dir.path / "grid.json", json{{"model.params.R", {1.0}}}.dump());

    const CommandResult sweep =
        run_cli("sweep config.json --grid grid.json", dir.path, "DIRAC_THERMO_THREADS=1");
    REQUIRE(sweep.exit_code == 0);

    TempDir direct;
    spit(direct.path / "config.json", cfg.dump());
    const CommandResult run = run_cli("run config.json", direct.path);
    REQUIRE(run.exit_code == 0);
    CHECK(slurp(dir.path / "run_000" / "trajectory.csv") ==
          slurp(direct.path / "trajectory.csv"));
}

TEST_CASE("sweep rejects an empty grid") {
    TempDir dir;
    spit(dir.path / "config.json", lcr_config().dump());
    spit(dir.path / "grid.json", "{}");
    const CommandResult r = run_cli("sweep config.json --grid grid.json", dir.path);
    CHECK(r.exit_code == 1);
}

TEST_CASE("sweep records per-run failures and continues") {
    TempDir dir;
    json cfg = lcr_config();
    cfg["t_span"] = {0.0, 0.05};
    spit(dir.path / "config.json", cfg.dump());
    // Second cell drives dt invalid; the sweep keeps going and flags it.
    spit(dir.path / "grid.json", json{{"dt", {1e-3, 0.0}}}.dump());
    const CommandResult r =
        run_cli("sweep config.json --grid grid.json", dir.path, "DIRAC_THERMO_THREADS=1");
    CHECK(r.exit_code == 0);
    const std::string summary = slurp(dir.path / "summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
    CHECK(summary.find(",1\n") != std::string::npos);  // failed cell exit code 1
    CHECK(fs::exists(dir.path / "run_000" / "trajectory.csv"));
}

TEST_CASE("invocation errors give a nonzero exit and help exits zero") {
    TempDir dir;
    CHECK(run_cli("", dir.path).exit_code != 0);
    CHECK(run_cli("frobnicate", dir.path).exit_code != 0);
    CHECK(run_cli("--help", dir.path).exit_code == 0);
    CHECK(run_cli("run", dir.path).exit_code == 1);  // missing required argument
}
