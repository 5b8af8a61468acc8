/// Command-line front end for the dirac_thermo library.
///
/// Subcommands:
///   run <config>            integrate a configured model, write trajectory + report
///   check <model> [--seed]  run the verification suite on a built-in model
///   sweep <config> --grid   run a config across a cartesian parameter grid
///   list-models             print the built-in model names
///
/// Exit codes: 0 success, 1 configuration error, 2 solver failure,
/// 3 verification suite failed.

#include <CLI11.hpp>

#include <cstdint>
#include <string>

#include "dirac_thermo/run_config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"simulation of thermodynamic systems with nonholonomic constraints"};
    app.require_subcommand(1);

    std::string run_config_path;
    CLI::App* run = app.add_subcommand("run", "integrate a configured model");
    run->add_option("config", run_config_path, "path to a JSON run configuration")->required();

    std::string check_model;
    std::uint64_t check_seed = 42;
    CLI::App* check = app.add_subcommand("check", "verify a built-in model");
    check->add_option("model", check_model, "built-in model name")->required();
    check->add_option("--seed", check_seed, "seed for the sampled verification states");

    std::string sweep_config_path;
    std::string sweep_grid_path;
    CLI::App* sweep = app.add_subcommand("sweep", "run a config across a parameter grid");
    sweep->add_option("config", sweep_config_path, "path to a JSON run configuration")->required();
    sweep->add_option("--grid", sweep_grid_path, "path to a JSON object of config-path arrays")
        ->required();

    CLI::App* list = app.add_subcommand("list-models", "print built-in model names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (run->parsed()) return dirac_thermo::run_command(run_config_path);
    if (check->parsed()) return dirac_thermo::check_command(check_model, check_seed);
    if (sweep->parsed()) return dirac_thermo::sweep_command(sweep_config_path, sweep_grid_path);
    if (list->parsed()) return dirac_thermo::list_models_command();
    return 1;
}
