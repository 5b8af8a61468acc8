#include "dirac_thermo/builtin_models.hpp"

#include <cmath>
#include <tuple>

#include "dirac_thermo/errors.hpp"

namespace dirac_thermo {

double TimeSignal::operator()(double t) const {
    if (is_constant()) {
        return constant;
    }
    return constant + amplitude * std::sin(frequency * t);
}

double piston_alpha(double phi, double a, double b) {
    const double k = a / b;
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    const double D = std::sqrt(1.0 - k * k * s * s);
    return a * s * (1.0 + k * c / D);
}

double piston_alpha_prime(double phi, double a, double b) {
    const double k = a / b;
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    const double D = std::sqrt(1.0 - k * k * s * s);
    return a * c + a * k * ((c * c - s * s) / D + k * k * s * s * c * c / (D * D * D));
}

namespace {

void require_positive(double value, const std::string& key) {
    if (!(value > 0.0)) {
        throw ConfigError(key, "must be positive");
    }
}

void require_nonnegative(double value, const std::string& key) {
    if (!(value >= 0.0)) {
        throw ConfigError(key, "must be nonnegative");
    }
}

void validate_gas(const IdealGasParams& gas, const std::string& prefix) {
    require_positive(gas.N0, prefix + ".N0");
    require_positive(gas.V0, prefix + ".V0");
    require_positive(gas.T0, prefix + ".T0");
}

}  // namespace

ThermoModel build_piston_cylinder(const PistonParams& params) {
    require_positive(params.M, "M");
    require_positive(params.m, "m");
    require_positive(params.a, "a");
    if (!(params.b > params.a)) {
        throw ConfigError("b", "connecting rod must satisfy b > a");
    }
    require_positive(params.A, "A");
    require_nonnegative(params.r, "r");
    validate_gas(params.gas, "gas");

    const double M = params.M;
    const double m = params.m;
    const double a = params.a;
    const double b = params.b;
    const double A = params.A;
    const double r = params.r;
    const double g = params.g;
    const double N0 = params.gas.N0;
    const IdealGas gas(params.gas);
    const TimeSignal torque = params.torque;

    ThermoModel model;
    model.n = 2;
    model.m = 1;
    model.name = "piston_cylinder";
    model.lagrangian = [=](const Vector& q, const Vector& v, double S) {
        return 0.5 * M * v(0) * v(0) + 0.5 * m * a * a * v(1) * v(1) -
               gas.energy(S, A * q(0), N0) - m * g * a * std::sin(q(1));
    };
    model.dL_dq = [=](const Vector& q, const Vector&, double S) {
        Vector out(2);
        out(0) = -gas.dU_dV(S, A * q(0), N0) * A;
        out(1) = -m * g * a * std::cos(q(1));
        return out;
    };
    model.dL_dv = [=](const Vector&, const Vector& v, double) {
        Vector out(2);
        out(0) = M * v(0);
        out(1) = m * a * a * v(1);
        return out;
    };
    model.dL_dS = [=](const Vector& q, const Vector&, double S) {
        return -gas.dU_dS(S, A * q(0), N0);
    };
    model.d2L_dv2 = [=](const Vector&, const Vector&, double) {
        Matrix out = Matrix::Zero(2, 2);
        out(0, 0) = M;
        out(1, 1) = m * a * a;
        return out;
    };
    model.friction_force = [=](const Vector&, const Vector& v, double) {
        Vector out(2);
        out(0) = -r * v(0);
        out(1) = 0.0;
        return out;
    };
    model.external_force = [=](double t, const Vector&, const Vector&, double) {
        Vector out(2);
        out(0) = 0.0;
        out(1) = torque(t);
        return out;
    };
    model.constraint_forms = [=](const Vector& q) {
        Matrix omega(1, 2);
        omega(0, 0) = 1.0;
        omega(0, 1) = piston_alpha(q(1), a, b);
        return omega;
    };
    model.constraint_forms_dot = [=](const Vector& q, const Vector& v) {
        Matrix omega_dot = Matrix::Zero(1, 2);
        omega_dot(0, 1) = piston_alpha_prime(q(1), a, b) * v(1);
        return omega_dot;
    };
    return model;
}

ThermoModel build_lcr(const LCRParams& params) {
    require_positive(params.L, "L");
    require_positive(params.C, "C");
    require_nonnegative(params.R, "R");
    require_positive(params.heat_capacity, "heat_capacity");
    require_positive(params.T0, "T0");

    const double L = params.L;
    const double C = params.C;
    const double R = params.R;
    const double cR = params.heat_capacity;
    const double T0 = params.T0;
    const double S0 = params.S0;
    const TimeSignal voltage = params.voltage;

    ThermoModel model;
    model.n = 4;
    model.m = 2;
    model.name = "lcr";
    model.lagrangian = [=](const Vector& q, const Vector& v, double S) {
        return 0.5 * L * v(0) * v(0) - q(1) * q(1) / (2.0 * C) -
               cR * T0 * std::exp((S - S0) / cR);
    };
    model.dL_dq = [=](const Vector& q, const Vector&, double) {
        Vector out = Vector::Zero(4);
        out(1) = -q(1) / C;
        return out;
    };
    model.dL_dv = [=](const Vector&, const Vector& v, double) {
        Vector out = Vector::Zero(4);
        out(0) = L * v(0);
        return out;
    };
    model.dL_dS = [=](const Vector&, const Vector&, double S) {
        return -T0 * std::exp((S - S0) / cR);
    };
    model.d2L_dv2 = [=](const Vector&, const Vector&, double) {
        Matrix out = Matrix::Zero(4, 4);
        out(0, 0) = L;
        return out;
    };
    model.friction_force = [=](const Vector&, const Vector& v, double) {
        Vector out = Vector::Zero(4);
        out(3) = -R * v(3);
        return out;
    };
    model.external_force = [=](double t, const Vector&, const Vector&, double) {
        Vector out = Vector::Zero(4);
        out(2) = voltage(t);
        return out;
    };
    // Kirchhoff current laws: the source current equals the inductor
    // current, and splits into the capacitor and resistor branches.
    Matrix omega(2, 4);
    omega << -1.0, 0.0, 1.0, 0.0,  //
        0.0, -1.0, 1.0, -1.0;
    model.constraint_forms = [omega](const Vector&) { return omega; };
    model.constraint_forms_dot = [](const Vector&, const Vector&) {
        return Matrix::Zero(2, 4);
    };
    return model;
}

OpenModel build_open_piston(const OpenPistonParams& params) {
    require_positive(params.M, "M");
    require_positive(params.A, "A");
    require_nonnegative(params.r, "r");
    validate_gas(params.gas, "gas");
    for (std::size_t i = 0; i < params.ports.size(); ++i) {
        const std::string prefix = "ports[" + std::to_string(i) + "]";
        require_positive(params.ports[i].T, prefix + ".T");
        require_nonnegative(params.ports[i].lambda, prefix + ".lambda");
        require_nonnegative(params.ports[i].sigma, prefix + ".sigma");
    }
    for (std::size_t i = 0; i < params.heat_sources.size(); ++i) {
        const std::string prefix = "sources[" + std::to_string(i) + "]";
        require_positive(params.heat_sources[i].T, prefix + ".T");
        require_nonnegative(params.heat_sources[i].kappa, prefix + ".kappa");
    }

    const double M = params.M;
    const double A = params.A;
    const double r = params.r;
    const IdealGas gas(params.gas);
    const TimeSignal force = params.force;

    OpenModel model;
    model.n = 1;
    model.m = 0;
    model.name = "open_piston";
    model.lagrangian = [=](const Vector& q, const Vector& v, double S, double N) {
        return 0.5 * M * v(0) * v(0) - gas.energy(S, A * q(0), N);
    };
    model.dL_dq = [=](const Vector& q, const Vector&, double S, double N) {
        Vector out(1);
        out(0) = -gas.dU_dV(S, A * q(0), N) * A;
        return out;
    };
    model.dL_dv = [=](const Vector&, const Vector& v, double, double) {
        Vector out(1);
        out(0) = M * v(0);
        return out;
    };
    model.dL_dS = [=](const Vector& q, const Vector&, double S, double N) {
        return -gas.dU_dS(S, A * q(0), N);
    };
    model.dL_dN = [=](const Vector& q, const Vector&, double S, double N) {
        return -gas.dU_dN(S, A * q(0), N);
    };
    model.d2L_dv2 = [=](const Vector&, const Vector&, double, double) {
        Matrix out(1, 1);
        out(0, 0) = M;
        return out;
    };
    model.friction_force = [=](const Vector&, const Vector& v, double, double) {
        Vector out(1);
        out(0) = -r * v(0);
        return out;
    };
    model.external_force = [=](double t, const Vector&, const Vector&, double, double) {
        Vector out(1);
        out(0) = force(t);
        return out;
    };
    model.constraint_forms = [](const Vector&) { return Matrix::Zero(0, 1); };
    model.constraint_forms_dot = [](const Vector&, const Vector&) {
        return Matrix::Zero(0, 1);
    };

    for (const PortParams& pp : params.ports) {
        Port port;
        port.chemical_potential = [pp](const OpenState&) { return pp.mu; };
        port.temperature = [pp](const OpenState&) { return pp.T; };
        port.matter_flux = [pp, gas, A](const OpenState& s) {
            return pp.lambda * (pp.mu - gas.chemical_potential(s.S, A * s.q(0), s.N));
        };
        port.entropy_flux = [pp, gas, A](const OpenState& s) {
            return pp.sigma * (pp.T - gas.temperature(s.S, A * s.q(0), s.N));
        };
        model.ports.push_back(std::move(port));
    }
    for (const HeatSourceParams& sp : params.heat_sources) {
        HeatSource source;
        source.temperature = [sp](const OpenState&) { return sp.T; };
        source.entropy_flux = [sp, gas, A](const OpenState& s) {
            return sp.kappa * (sp.T - gas.temperature(s.S, A * s.q(0), s.N));
        };
        model.heat_sources.push_back(std::move(source));
    }
    return model;
}

namespace {

double require_number(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number()) {
        throw ConfigError(key, "expected a number");
    }
    return value.get<double>();
}

TimeSignal parse_signal(const nlohmann::json& value, const std::string& key) {
    TimeSignal signal;
    if (value.is_number()) {
        signal.constant = value.get<double>();
        return signal;
    }
    if (!value.is_object()) {
        throw ConfigError(key, "expected a number or an object");
    }
    for (const auto& [k, v] : value.items()) {
        const std::string sub = key + "." + k;
        if (k == "constant") {
            signal.constant = require_number(v, sub);
        } else if (k == "amplitude") {
            signal.amplitude = require_number(v, sub);
        } else if (k == "frequency") {
            signal.frequency = require_number(v, sub);
        } else {
            throw ConfigError(sub, "unknown parameter");
        }
    }
    return signal;
}

nlohmann::json signal_to_json(const TimeSignal& signal) {
    if (signal.is_constant()) {
        return signal.constant;
    }
    nlohmann::json j;
    if (signal.constant != 0.0) {
        j["constant"] = signal.constant;
    }
    j["amplitude"] = signal.amplitude;
    j["frequency"] = signal.frequency;
    return j;
}

IdealGasParams parse_gas(const nlohmann::json& value, const std::string& prefix,
                         IdealGasParams gas) {
    if (!value.is_object()) {
        throw ConfigError(prefix, "expected an object");
    }
    for (const auto& [k, v] : value.items()) {
        const std::string sub = prefix + "." + k;
        if (k == "N0") {
            gas.N0 = require_number(v, sub);
        } else if (k == "S0") {
            gas.S0 = require_number(v, sub);
        } else if (k == "V0") {
            gas.V0 = require_number(v, sub);
        } else if (k == "T0") {
            gas.T0 = require_number(v, sub);
        } else {
            throw ConfigError(sub, "unknown parameter");
        }
    }
    return gas;
}

nlohmann::json gas_to_json(const IdealGasParams& gas) {
    return nlohmann::json{{"N0", gas.N0}, {"S0", gas.S0}, {"V0", gas.V0}, {"T0", gas.T0}};
}

PistonParams parse_piston_params(const nlohmann::json& params) {
    PistonParams p;
    if (!params.is_object()) {
        if (!params.is_null()) {
            throw ConfigError("model.params", "expected an object");
        }
        return p;
    }
    for (const auto& [k, v] : params.items()) {
        if (k == "M") {
            p.M = require_number(v, k);
        } else if (k == "m") {
            p.m = require_number(v, k);
        } else if (k == "a") {
            p.a = require_number(v, k);
        } else if (k == "b") {
            p.b = require_number(v, k);
        } else if (k == "A") {
            p.A = require_number(v, k);
        } else if (k == "r") {
            p.r = require_number(v, k);
        } else if (k == "g") {
            p.g = require_number(v, k);
        } else if (k == "T_ext") {
            p.torque = parse_signal(v, k);
        } else if (k == "gas") {
            p.gas = parse_gas(v, k, p.gas);
        } else {
            throw ConfigError(k, "unknown parameter");
        }
    }
    return p;
}

LCRParams parse_lcr_params(const nlohmann::json& params) {
    LCRParams p;
    if (!params.is_object()) {
        if (!params.is_null()) {
            throw ConfigError("model.params", "expected an object");
        }
        return p;
    }
    for (const auto& [k, v] : params.items()) {
        if (k == "L") {
            p.L = require_number(v, k);
        } else if (k == "C") {
            p.C = require_number(v, k);
        } else if (k == "R") {
            p.R = require_number(v, k);
        } else if (k == "V") {
            p.voltage = parse_signal(v, k);
        } else if (k == "heat_capacity") {
            p.heat_capacity = require_number(v, k);
        } else if (k == "T0") {
            p.T0 = require_number(v, k);
        } else if (k == "S0") {
            p.S0 = require_number(v, k);
        } else {
            throw ConfigError(k, "unknown parameter");
        }
    }
    return p;
}

OpenPistonParams parse_open_piston_params(const nlohmann::json& params) {
    OpenPistonParams p;
    if (!params.is_object()) {
        if (!params.is_null()) {
            throw ConfigError("model.params", "expected an object");
        }
        return p;
    }
    for (const auto& [k, v] : params.items()) {
        if (k == "M") {
            p.M = require_number(v, k);
        } else if (k == "A") {
            p.A = require_number(v, k);
        } else if (k == "r") {
            p.r = require_number(v, k);
        } else if (k == "F_ext") {
            p.force = parse_signal(v, k);
        } else if (k == "gas") {
            p.gas = parse_gas(v, k, p.gas);
        } else if (k == "ports") {
            if (!v.is_array()) {
                throw ConfigError(k, "expected an array");
            }
            p.ports.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                const std::string prefix = "ports[" + std::to_string(i) + "]";
                if (!v[i].is_object()) {
                    throw ConfigError(prefix, "expected an object");
                }
                PortParams port;
                for (const auto& [pk, pv] : v[i].items()) {
                    const std::string sub = prefix + "." + pk;
                    if (pk == "mu") {
                        port.mu = require_number(pv, sub);
                    } else if (pk == "T") {
                        port.T = require_number(pv, sub);
                    } else if (pk == "lambda") {
                        port.lambda = require_number(pv, sub);
                    } else if (pk == "sigma") {
                        port.sigma = require_number(pv, sub);
                    } else {
                        throw ConfigError(sub, "unknown parameter");
                    }
                }
                p.ports.push_back(port);
            }
        } else if (k == "sources") {
            if (!v.is_array()) {
                throw ConfigError(k, "expected an array");
            }
            p.heat_sources.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                const std::string prefix = "sources[" + std::to_string(i) + "]";
                if (!v[i].is_object()) {
                    throw ConfigError(prefix, "expected an object");
                }
                HeatSourceParams source;
                for (const auto& [sk, sv] : v[i].items()) {
                    const std::string sub = prefix + "." + sk;
                    if (sk == "T") {
                        source.T = require_number(sv, sub);
                    } else if (sk == "kappa") {
                        source.kappa = require_number(sv, sub);
                    } else {
                        throw ConfigError(sub, "unknown parameter");
                    }
                }
                p.heat_sources.push_back(source);
            }
        } else {
            throw ConfigError(k, "unknown parameter");
        }
    }
    return p;
}

StateSampler piston_sampler(const PistonParams& params) {
    const double a = params.a;
    const double b = params.b;
    const double N0 = params.gas.N0;
    return [a, b, N0](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        SampledState s;
        s.q = Vector(2);
        s.v = Vector(2);
        s.q(0) = 0.35 + 0.40 * u01(rng);
        s.q(1) = -1.0 + 2.0 * u01(rng);
        s.v(1) = -1.0 + 2.0 * u01(rng);
        s.v(0) = -piston_alpha(s.q(1), a, b) * s.v(1);
        s.S = -0.01 + 0.02 * u01(rng);
        s.N = N0;
        return s;
    };
}

StateSampler lcr_sampler(const LCRParams& params) {
    const double R = params.R;
    const double C = params.C;
    return [R, C](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        SampledState s;
        s.q = Vector(4);
        s.v = Vector(4);
        s.q(0) = -1.0 + 2.0 * u01(rng);
        s.q(1) = -0.1 + 0.2 * u01(rng);
        s.q(2) = -1.0 + 2.0 * u01(rng);
        s.q(3) = -1.0 + 2.0 * u01(rng);
        s.S = -0.1 + 0.2 * u01(rng);
        const double f_L = -1.0 + 2.0 * u01(rng);
        // Massless branch currents sit on the algebraic manifold: the
        // resistor current balances the capacitor voltage.
        const double f_R = R > 0.0 ? s.q(1) / (R * C) : 0.0;
        s.v(0) = f_L;
        s.v(1) = f_L - f_R;
        s.v(2) = f_L;
        s.v(3) = f_R;
        s.N = 0.0;
        return s;
    };
}

StateSampler open_piston_sampler(const OpenPistonParams& params) {
    const double N0 = params.gas.N0;
    return [N0](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        SampledState s;
        s.q = Vector(1);
        s.v = Vector(1);
        s.q(0) = 0.4 + 0.4 * u01(rng);
        s.v(0) = -0.5 + 1.0 * u01(rng);
        s.S = -0.01 + 0.02 * u01(rng);
        s.N = (0.8 + 0.5 * u01(rng)) * N0;
        return s;
    };
}

void run_validation_gate(const ThermoModel& model, const StateSampler& sampler) {
    std::mt19937_64 rng(0x5eedULL);
    std::vector<std::tuple<Vector, Vector, double>> states;
    states.reserve(5);
    for (int i = 0; i < 5; ++i) {
        const SampledState s = sampler(rng);
        states.emplace_back(s.q, s.v, s.S);
    }
    validate_model(model, states);
}

void run_open_validation_gate(const OpenModel& model, const StateSampler& sampler) {
    std::mt19937_64 rng(0x5eedULL);
    for (int i = 0; i < 5; ++i) {
        const SampledState s = sampler(rng);
        validate_model(model.closed_view(s.N), {{s.q, s.v, s.S}});
        const double h = 1e-5 * std::max(std::abs(s.N), 1e-12);
        const double fd = (model.lagrangian(s.q, s.v, s.S, s.N + h) -
                           model.lagrangian(s.q, s.v, s.S, s.N - h)) /
                          (2.0 * h);
        const double analytic = model.dL_dN(s.q, s.v, s.S, s.N);
        const double err = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
        if (!(err <= 1e-4)) {
            throw ModelValidationError("dL/dN disagrees with finite differences");
        }
    }
}

}  // namespace

std::vector<std::string> builtin_names() { return {"piston_cylinder", "lcr", "open_piston"}; }

nlohmann::json builtin_default_params(const std::string& name) {
    if (name == "piston_cylinder") {
        const PistonParams p;
        return nlohmann::json{{"M", p.M},
                              {"m", p.m},
                              {"a", p.a},
                              {"b", p.b},
                              {"A", p.A},
                              {"r", p.r},
                              {"g", p.g},
                              {"T_ext", signal_to_json(p.torque)},
                              {"gas", gas_to_json(p.gas)}};
    }
    if (name == "lcr") {
        const LCRParams p;
        return nlohmann::json{{"L", p.L},
                              {"C", p.C},
                              {"R", p.R},
                              {"V", signal_to_json(p.voltage)},
                              {"heat_capacity", p.heat_capacity},
                              {"T0", p.T0},
                              {"S0", p.S0}};
    }
    if (name == "open_piston") {
        const OpenPistonParams p;
        nlohmann::json ports = nlohmann::json::array();
        for (const PortParams& port : p.ports) {
            ports.push_back(nlohmann::json{{"mu", port.mu},
                                           {"T", port.T},
                                           {"lambda", port.lambda},
                                           {"sigma", port.sigma}});
        }
        nlohmann::json sources = nlohmann::json::array();
        for (const HeatSourceParams& source : p.heat_sources) {
            sources.push_back(nlohmann::json{{"T", source.T}, {"kappa", source.kappa}});
        }
        return nlohmann::json{{"M", p.M},
                              {"A", p.A},
                              {"r", p.r},
                              {"F_ext", signal_to_json(p.force)},
                              {"gas", gas_to_json(p.gas)},
                              {"ports", ports},
                              {"sources", sources}};
    }
    throw ConfigError("model.name", "unknown model '" + name + "'");
}

BuiltModel build_builtin(const std::string& name, const nlohmann::json& params) {
    BuiltModel built;
    built.name = name;
    if (name == "piston_cylinder") {
        const PistonParams p = parse_piston_params(params);
        built.closed = build_piston_cylinder(p);
        built.sampler = piston_sampler(p);
        run_validation_gate(*built.closed, built.sampler);
    } else if (name == "lcr") {
        const LCRParams p = parse_lcr_params(params);
        built.closed = build_lcr(p);
        built.sampler = lcr_sampler(p);
        run_validation_gate(*built.closed, built.sampler);
    } else if (name == "open_piston") {
        const OpenPistonParams p = parse_open_piston_params(params);
        built.open = build_open_piston(p);
        built.sampler = open_piston_sampler(p);
        run_open_validation_gate(*built.open, built.sampler);
    } else {
        throw ConfigError("model.name", "unknown model '" + name + "'");
    }
    return built;
}

}  // namespace dirac_thermo
