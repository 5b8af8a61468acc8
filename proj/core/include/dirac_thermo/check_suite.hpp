#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dirac_thermo/builtin_models.hpp"

namespace dirac_thermo {

/// One verification check. `worst_value` is the largest violation the check
/// observed (0 when the property holds exactly) and passes when it does not
/// exceed `tolerance`. A check that aborted records the exception text in
/// `message` and fails.
struct CheckResult {
    std::string name;
    bool passed = false;
    double worst_value = 0.0;
    double tolerance = 0.0;
    std::string message;
};

struct VerificationReport {
    std::string model;
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;
    bool overall = false;

    nlohmann::json to_json() const;
};

/// Structural verification of a built model: Dirac certification of the
/// induced structures at random admissible states, finite-difference
/// validation of the analytic derivatives, and a short reference integration
/// whose diagnostics (membership residuals, first law, entropy production,
/// constraint maintenance) must meet the library tolerances. Open models
/// additionally verify the entropy-rate decomposition and the nonnegativity
/// of internal production. Deterministic for a given seed.
VerificationReport run_check_suite(const BuiltModel& model, std::uint64_t seed);

/// Convenience overload: builds the named built-in from JSON parameters
/// (ConfigError on bad input) and runs the suite.
VerificationReport run_check_suite(const std::string& name, const nlohmann::json& params,
                                   std::uint64_t seed);

}  // namespace dirac_thermo
