#include "dirac_thermo/run_config.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

namespace dirac_thermo {

namespace {

double require_number(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number()) {
        throw ConfigError(key, "expected a number");
    }
    return value.get<double>();
}

int require_integer(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number_integer()) {
        throw ConfigError(key, "expected an integer");
    }
    return value.get<int>();
}

bool require_bool(const nlohmann::json& value, const std::string& key) {
    if (!value.is_boolean()) {
        throw ConfigError(key, "expected a boolean");
    }
    return value.get<bool>();
}

std::string require_string(const nlohmann::json& value, const std::string& key) {
    if (!value.is_string()) {
        throw ConfigError(key, "expected a string");
    }
    return value.get<std::string>();
}

Vector require_vector(const nlohmann::json& value, const std::string& key) {
    if (!value.is_array()) {
        throw ConfigError(key, "expected an array of numbers");
    }
    Vector out(static_cast<Eigen::Index>(value.size()));
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number()) {
            throw ConfigError(key + "[" + std::to_string(i) + "]", "expected a number");
        }
        out(static_cast<Eigen::Index>(i)) = value[i].get<double>();
    }
    return out;
}

void parse_tolerances(const nlohmann::json& value, SolverOptions& opts) {
    if (!value.is_object()) {
        throw ConfigError("tolerances", "expected an object");
    }
    for (const auto& [k, v] : value.items()) {
        const std::string key = "tolerances." + k;
        if (k == "kkt_condition_max") {
            opts.kkt_condition_max = require_number(v, key);
        } else if (k == "kkt_singular_tol") {
            opts.kkt_singular_tol = require_number(v, key);
        } else if (k == "restore_tol") {
            opts.restore_tol = require_number(v, key);
        } else if (k == "restore_max_iter") {
            opts.restore_max_iter = require_integer(v, key);
        } else if (k == "fd_step") {
            opts.fd_step = require_number(v, key);
        } else if (k == "newton_tol") {
            opts.newton_tol = require_number(v, key);
        } else if (k == "newton_max_iter") {
            opts.newton_max_iter = require_integer(v, key);
        } else if (k == "constraint_tol") {
            opts.constraint_tol = require_number(v, key);
        } else if (k == "halving_max_depth") {
            opts.halving_max_depth = require_integer(v, key);
        } else {
            throw ConfigError(key, "unknown tolerance");
        }
    }
}

nlohmann::json read_json_file(const std::string& path, const std::string& key) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(key, "cannot read '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(key, std::string("invalid JSON: ") + e.what());
    }
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

nlohmann::json vector_to_json(const Vector& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

nlohmann::json make_report(const Trajectory& traj) {
    const TrajectorySample& last = traj.samples.back();
    nlohmann::json final_state{{"t", last.t},
                               {"q", vector_to_json(last.state.q)},
                               {"v", vector_to_json(last.state.v)},
                               {"S", last.state.S}};
    if (traj.open && !traj.open_samples.empty()) {
        final_state["N"] = traj.open_samples.back().N;
    }

    double max_energy_defect = 0.0;
    double min_entropy_increment = 0.0;
    double max_dirac = 0.0;
    double max_constraint = 0.0;
    bool first_increment = true;
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const TrajectorySample& s = traj.samples[i];
        max_dirac = std::max(max_dirac, s.dirac_residual);
        if (s.constraint_residuals.size() > 0) {
            max_constraint =
                std::max(max_constraint, s.constraint_residuals.lpNorm<Eigen::Infinity>());
        }
        if (i + 1 < traj.samples.size()) {
            const double dE = traj.samples[i + 1].energy - s.energy;
            double inflow = i < traj.work_increments.size() ? traj.work_increments[i] : 0.0;
            if (i < traj.heat_increments.size()) {
                inflow += traj.heat_increments[i];
            }
            if (i < traj.matter_increments.size()) {
                inflow += traj.matter_increments[i];
            }
            max_energy_defect = std::max(max_energy_defect, std::abs(dE - inflow));
            const double increment = traj.samples[i + 1].state.S - s.state.S;
            min_entropy_increment =
                first_increment ? increment : std::min(min_entropy_increment, increment);
            first_increment = false;
        }
    }

    return nlohmann::json{{"final_state", final_state},
                          {"max_energy_defect", max_energy_defect},
                          {"min_entropy_increment", min_entropy_increment},
                          {"max_dirac_residual", max_dirac},
                          {"max_constraint_residual", max_constraint}};
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config", "expected a JSON object");
    }
    RunConfig config;
    bool have_model = false, have_initial = false, have_span = false, have_dt = false;

    for (const auto& [k, v] : j.items()) {
        if (k == "model") {
            if (!v.is_object()) {
                throw ConfigError("model", "expected an object");
            }
            for (const auto& [mk, mv] : v.items()) {
                if (mk == "name") {
                    config.model_name = require_string(mv, "model.name");
                } else if (mk == "params") {
                    if (!mv.is_object()) {
                        throw ConfigError("model.params", "expected an object");
                    }
                    config.model_params = mv;
                } else {
                    throw ConfigError("model." + mk, "unknown key");
                }
            }
            if (config.model_name.empty()) {
                throw ConfigError("model.name", "required");
            }
            have_model = true;
        } else if (k == "initial") {
            if (!v.is_object()) {
                throw ConfigError("initial", "expected an object");
            }
            bool have_q = false, have_v = false;
            for (const auto& [ik, iv] : v.items()) {
                if (ik == "q") {
                    config.q0 = require_vector(iv, "initial.q");
                    have_q = true;
                } else if (ik == "v") {
                    config.v0 = require_vector(iv, "initial.v");
                    have_v = true;
                } else if (ik == "S") {
                    config.S0 = require_number(iv, "initial.S");
                } else if (ik == "N") {
                    config.N0 = require_number(iv, "initial.N");
                    config.has_N = true;
                } else {
                    throw ConfigError("initial." + ik, "unknown key");
                }
            }
            if (!have_q) {
                throw ConfigError("initial.q", "required");
            }
            if (!have_v) {
                throw ConfigError("initial.v", "required");
            }
            if (config.q0.size() != config.v0.size()) {
                throw ConfigError("initial.v", "must match the length of initial.q");
            }
            have_initial = true;
        } else if (k == "t_span") {
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
                throw ConfigError("t_span", "expected [t0, t1]");
            }
            config.t0 = v[0].get<double>();
            config.t1 = v[1].get<double>();
            if (!(config.t1 > config.t0)) {
                throw ConfigError("t_span", "must satisfy t1 > t0");
            }
            have_span = true;
        } else if (k == "dt") {
            config.dt = require_number(v, "dt");
            if (!(config.dt > 0.0)) {
                throw ConfigError("dt", "must be positive");
            }
            have_dt = true;
        } else if (k == "scheme") {
            const std::string scheme = require_string(v, "scheme");
            if (scheme == "rk4") {
                config.scheme = Scheme::rk4;
            } else if (scheme == "implicit_midpoint") {
                config.scheme = Scheme::implicit_midpoint;
            } else {
                throw ConfigError("scheme", "expected 'rk4' or 'implicit_midpoint'");
            }
        } else if (k == "projection") {
            config.options.projection = require_bool(v, "projection");
        } else if (k == "tolerances") {
            parse_tolerances(v, config.options);
        } else if (k == "outputs") {
            if (!v.is_object()) {
                throw ConfigError("outputs", "expected an object");
            }
            for (const auto& [ok, ov] : v.items()) {
                if (ok == "trajectory") {
                    config.trajectory_path = require_string(ov, "outputs.trajectory");
                } else if (ok == "report") {
                    config.report_path = require_string(ov, "outputs.report");
                } else {
                    throw ConfigError("outputs." + ok, "unknown key");
                }
            }
        } else if (k == "seed") {
            if (v.is_number_unsigned()) {
                config.seed = v.get<std::uint64_t>();
            } else if (v.is_number_integer() && v.get<long long>() >= 0) {
                config.seed = static_cast<std::uint64_t>(v.get<long long>());
            } else {
                throw ConfigError("seed", "expected a nonnegative integer");
            }
        } else {
            throw ConfigError(k, "unknown key");
        }
    }

    if (!have_model) {
        throw ConfigError("model", "required");
    }
    if (!have_initial) {
        throw ConfigError("initial", "required");
    }
    if (!have_span) {
        throw ConfigError("t_span", "required");
    }
    if (!have_dt) {
        throw ConfigError("dt", "required");
    }
    if (config.dt > (config.t1 - config.t0) * (1.0 + 1e-12)) {
        throw ConfigError("dt", "must not exceed the span t1 - t0");
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_json_file(path, "config"));
}

RunArtifacts execute_run(const RunConfig& config) {
    RunArtifacts art;
    const BuiltModel built = build_builtin(config.model_name, config.model_params);
    const Eigen::Index n = built.closed ? built.closed->n : built.open->n;
    if (config.q0.size() != n) {
        throw ConfigError("initial.q", "expected length " + std::to_string(n));
    }
    if (config.v0.size() != n) {
        throw ConfigError("initial.v", "expected length " + std::to_string(n));
    }

    try {
        if (built.closed) {
            if (config.has_N) {
                throw ConfigError("initial.N", "only valid for open models");
            }
            SimulationInput input;
            input.q0 = config.q0;
            input.v0 = config.v0;
            input.S0 = config.S0;
            input.t0 = config.t0;
            input.t1 = config.t1;
            input.dt = config.dt;
            input.scheme = config.scheme;
            input.options = config.options;
            art.trajectory = simulate(*built.closed, input);
        } else {
            if (!config.has_N) {
                throw ConfigError("initial.N", "required for open models");
            }
            OpenSimulationInput input;
            input.q0 = config.q0;
            input.v0 = config.v0;
            input.S0 = config.S0;
            input.N0 = config.N0;
            input.t0 = config.t0;
            input.t1 = config.t1;
            input.dt = config.dt;
            input.scheme = config.scheme;
            input.options = config.options;
            art.trajectory = open_simulate(*built.open, input);
        }
    } catch (const InitialStateError& e) {
        throw ConfigError("initial.v", e.what());
    }

    art.report = make_report(art.trajectory);
    if (art.trajectory.failed) {
        art.exit_code = 2;
        art.error_message = art.trajectory.failure_message;
    }

    if (!config.trajectory_path.empty()) {
        std::ofstream out(config.trajectory_path);
        if (!out) {
            throw ConfigError("outputs.trajectory",
                              "cannot open '" + config.trajectory_path + "' for writing");
        }
        art.trajectory.write_csv(out);
    }
    if (!config.report_path.empty()) {
        std::ofstream out(config.report_path);
        if (!out) {
            throw ConfigError("outputs.report",
                              "cannot open '" + config.report_path + "' for writing");
        }
        out << art.report.dump(2) << "\n";
    }
    return art;
}

int run_command(const std::string& config_path) {
    try {
        const RunConfig config = load_run_config(config_path);
        const RunArtifacts art = execute_run(config);
        std::cout << art.report.dump(2) << "\n";
        if (art.exit_code != 0) {
            std::cerr << "solver failure: " << art.error_message << "\n";
        }
        return art.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int check_command(const std::string& model_name, std::uint64_t seed) {
    try {
        const VerificationReport report =
            run_check_suite(model_name, nlohmann::json::object(), seed);
        std::cout << report.to_json().dump(2) << "\n";
        return report.overall ? 0 : 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

namespace {

void set_dotted(nlohmann::json& root, const std::string& path, const nlohmann::json& value) {
    nlohmann::json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key =
            dot == std::string::npos ? path.substr(start) : path.substr(start, dot - start);
        if (key.empty()) {
            throw ConfigError(path, "empty path segment");
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key)) {
            (*node)[key] = nlohmann::json::object();
        }
        node = &(*node)[key];
        if (!node->is_object()) {
            throw ConfigError(path, "path descends into a non-object value");
        }
        start = dot + 1;
    }
}

std::string format_grid_value(const nlohmann::json& value) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_float()) {
        return format_double(value.get<double>());
    }
    return value.dump();
}

std::size_t sweep_thread_cap() {
    std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DIRAC_THERMO_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && parsed > 0) {
            cap = static_cast<std::size_t>(parsed);
        }
    }
    return cap;
}

struct SweepRow {
    std::vector<nlohmann::json> params;
    double final_S = std::numeric_limits<double>::quiet_NaN();
    double max_energy_defect = std::numeric_limits<double>::quiet_NaN();
    int exit_code = 0;
    std::string message;
};

}  // namespace

int sweep_command(const std::string& config_path, const std::string& grid_path) {
    std::vector<std::string> keys;
    std::vector<std::vector<nlohmann::json>> values;
    nlohmann::json base;
    try {
        base = read_json_file(config_path, "config");
        const nlohmann::json grid = read_json_file(grid_path, "grid");
        if (!grid.is_object()) {
            throw ConfigError("grid", "expected an object mapping config paths to value arrays");
        }
        for (const auto& [k, v] : grid.items()) {
            if (!v.is_array()) {
                throw ConfigError(k, "expected an array of values");
            }
            keys.push_back(k);
            values.emplace_back(v.begin(), v.end());
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    std::size_t total = keys.empty() ? 0 : 1;
    for (const auto& vs : values) {
        total *= vs.size();
    }
    if (total == 0) {
        std::cerr << "sweep grid is empty\n";
        return 1;
    }

    std::vector<SweepRow> rows(total);
    for (std::size_t run = 0; run < total; ++run) {
        std::size_t rem = run;
        std::vector<nlohmann::json> combo(keys.size());
        for (std::size_t k = keys.size(); k-- > 0;) {
            combo[k] = values[k][rem % values[k].size()];
            rem /= values[k].size();
        }
        rows[run].params = std::move(combo);
    }

    std::vector<std::string> run_dirs(total);
    try {
        for (std::size_t run = 0; run < total; ++run) {
            char name[32];
            std::snprintf(name, sizeof(name), "run_%03zu", run);
            run_dirs[run] = name;
            std::filesystem::create_directories(run_dirs[run]);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: cannot create run directories: " << e.what() << "\n";
        return 1;
    }

    const auto execute_one = [&](std::size_t run) {
        SweepRow& row = rows[run];
        try {
            nlohmann::json cfg = base;
            for (std::size_t k = 0; k < keys.size(); ++k) {
                set_dotted(cfg, keys[k], row.params[k]);
            }
            set_dotted(cfg, "outputs.trajectory", run_dirs[run] + "/trajectory.csv");
            set_dotted(cfg, "outputs.report", run_dirs[run] + "/report.json");
            const RunConfig parsed = parse_run_config(cfg);
            const RunArtifacts art = execute_run(parsed);
            row.exit_code = art.exit_code;
            row.message = art.error_message;
            if (!art.trajectory.samples.empty()) {
                row.final_S = art.trajectory.samples.back().state.S;
            }
            row.max_energy_defect = art.report["max_energy_defect"].get<double>();
        } catch (const ConfigError& e) {
            row.exit_code = 1;
            row.message = e.what();
        } catch (const std::exception& e) {
            row.exit_code = 2;
            row.message = e.what();
        }
    };

    const std::size_t workers = std::min(total, sweep_thread_cap());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t run = next.fetch_add(1); run < total; run = next.fetch_add(1)) {
                execute_one(run);
            }
        });
    }
    for (std::thread& t : pool) {
        t.join();
    }

    std::ofstream summary("summary.csv");
    if (!summary) {
        std::cerr << "error: cannot open summary.csv for writing\n";
        return 1;
    }
    for (const std::string& key : keys) {
        summary << key << ",";
    }
    summary << "final_S,max_energy_defect,exit\n";
    for (const SweepRow& row : rows) {
        for (const nlohmann::json& value : row.params) {
            summary << format_grid_value(value) << ",";
        }
        summary << format_double(row.final_S) << "," << format_double(row.max_energy_defect)
                << "," << row.exit_code << "\n";
    }
    summary.close();

    std::size_t failures = 0;
    for (const SweepRow& row : rows) {
        if (row.exit_code != 0) {
            ++failures;
            std::cerr << "run " << (&row - rows.data()) << " exited " << row.exit_code << ": "
                      << row.message << "\n";
        }
    }
    std::cout << "sweep complete: " << total << " runs, " << failures
              << " failed; summary.csv written\n";
    return 0;
}

int list_models_command() {
    for (const std::string& name : builtin_names()) {
        std::cout << name << "\n";
    }
    return 0;
}

}  // namespace dirac_thermo
