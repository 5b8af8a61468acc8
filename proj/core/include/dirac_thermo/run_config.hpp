#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "dirac_thermo/builtin_models.hpp"
#include "dirac_thermo/check_suite.hpp"
#include "dirac_thermo/trajectory.hpp"

namespace dirac_thermo {

/// Parsed simulation configuration. JSON schema:
///   {
///     "model": {"name": "...", "params": {...}},
///     "initial": {"q": [...], "v": [...], "S": 0.0, "N": 0.002},
///     "t_span": [0.0, 1.0],
///     "dt": 1e-3,
///     "scheme": "rk4" | "implicit_midpoint",
///     "projection": true,
///     "tolerances": {"newton_tol": ..., ...},
///     "outputs": {"trajectory": "traj.csv", "report": "report.json"},
///     "seed": 0
///   }
/// model, initial, t_span, and dt are required; initial.N exactly for open
/// models. Unknown or mistyped keys raise ConfigError naming the key.
struct RunConfig {
    std::string model_name;
    nlohmann::json model_params = nlohmann::json::object();

    Vector q0;
    Vector v0;
    double S0 = 0.0;
    double N0 = 0.0;
    bool has_N = false;

    double t0 = 0.0;
    double t1 = 1.0;
    double dt = 1e-3;
    Scheme scheme = Scheme::rk4;
    SolverOptions options;

    std::string trajectory_path;  ///< empty: no CSV written
    std::string report_path;      ///< empty: no report file written
    std::uint64_t seed = 0;
};

RunConfig parse_run_config(const nlohmann::json& j);

/// Reads and parses a config file; file-system and JSON syntax problems
/// surface as ConfigError.
RunConfig load_run_config(const std::string& path);

/// Outcome of one executed configuration.
struct RunArtifacts {
    int exit_code = 0;  ///< 0 success, 2 solver failure mid-run
    Trajectory trajectory;
    nlohmann::json report;
    std::string error_message;
};

/// Builds the configured model, integrates, writes the configured output
/// files (the trajectory CSV is retained even when the run fails mid-way),
/// and assembles the report with keys {final_state, max_energy_defect,
/// min_entropy_increment, max_dirac_residual, max_constraint_residual}.
/// Throws ConfigError for configuration problems (including an inadmissible
/// initial state); solver failures are reported through exit_code = 2.
RunArtifacts execute_run(const RunConfig& config);

/// CLI entry points. Each prints its result and returns the process exit
/// code: 0 success, 1 configuration error (message names the offending
/// key), 2 solver failure, 3 check suite overall failure.
int run_command(const std::string& config_path);
int check_command(const std::string& model_name, std::uint64_t seed);
int sweep_command(const std::string& config_path, const std::string& grid_path);
int list_models_command();

}  // namespace dirac_thermo
