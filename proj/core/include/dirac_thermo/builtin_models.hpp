#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dirac_thermo/ideal_gas.hpp"
#include "dirac_thermo/open_system.hpp"

namespace dirac_thermo {

/// Scalar signal of time, constant + amplitude * sin(frequency * t). Parsed
/// from JSON as either a bare number (the constant) or an object with keys
/// among {"constant", "amplitude", "frequency"}.
struct TimeSignal {
    double constant = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;

    double operator()(double t) const;
    bool is_constant() const { return amplitude == 0.0; }
};

/// Crank-slider piston compressing an ideal gas column: piston position q
/// and crank angle phi coupled by the nonholonomically-imposed transmission
/// constraint v_q + alpha(phi) v_phi = 0, viscous friction at the piston
/// face heating the gas.
struct PistonParams {
    double M = 2.0;      ///< piston mass
    double m = 0.4;      ///< crank mass, modeled at radius a
    double a = 0.25;     ///< crank radius
    double b = 0.6;      ///< connecting rod length; must satisfy b > a
    double A = 0.01;     ///< piston face area, gas volume V = A q
    double r = 0.5;      ///< viscous friction coefficient at the piston
    double g = 9.81;     ///< gravity acting on the crank mass
    TimeSignal torque;   ///< external crank torque
    IdealGasParams gas;  ///< gas reference state; mole number frozen at N0
};

/// Series LCR circuit with the resistor thermally coupled to a constant
/// heat capacity internal energy. Charge coordinates, in order: inductor,
/// capacitor, source, resistor. The two Kirchhoff current constraints are
/// constant, so the mass matrix is degenerate on their kernel.
struct LCRParams {
    double L = 1.0;              ///< inductance
    double C = 0.5;              ///< capacitance
    double R = 1.0;              ///< resistance
    TimeSignal voltage;          ///< source voltage
    double heat_capacity = 5.0;  ///< resistor heat capacity
    double T0 = 300.0;           ///< resistor reference temperature
    double S0 = 0.0;             ///< resistor reference entropy
};

/// Matter port with linear flux laws J = lambda (mu_port - mu) and
/// J_S = sigma (T_port - T) against the system's own potentials.
struct PortParams {
    double mu = 6000.0;    ///< port chemical potential
    double T = 320.0;      ///< port temperature
    double lambda = 2e-7;  ///< matter conductance
    double sigma = 5e-5;   ///< entropy conductance
};

/// Heat source with linear flux law J_S = kappa (T_source - T).
struct HeatSourceParams {
    double T = 320.0;     ///< source temperature
    double kappa = 1e-4;  ///< entropy conductance
};

/// Unconstrained 1-dof piston over an ideal gas that exchanges matter and
/// heat with external reservoirs.
struct OpenPistonParams {
    double M = 2.0;     ///< piston mass
    double A = 0.01;    ///< piston face area
    double r = 0.5;     ///< viscous friction coefficient
    TimeSignal force;   ///< external force on the piston
    IdealGasParams gas;
    std::vector<PortParams> ports{PortParams{}};
    std::vector<HeatSourceParams> heat_sources{HeatSourceParams{}};
};

/// Crank-slider transmission ratio: on the constraint the piston velocity
/// is -alpha(phi) times the crank rate. Requires b > a so the rod never
/// folds (the square root stays positive).
double piston_alpha(double phi, double a, double b);
/// Derivative of piston_alpha with respect to phi.
double piston_alpha_prime(double phi, double a, double b);

ThermoModel build_piston_cylinder(const PistonParams& params = {});
ThermoModel build_lcr(const LCRParams& params = {});
OpenModel build_open_piston(const OpenPistonParams& params = {});

/// Random admissible state: the velocity satisfies the constraints and lies
/// on the algebraic manifold of any massless coordinates, and the entropy
/// stays within the scale set by the model's heat capacity. N is meaningful
/// only for open models.
struct SampledState {
    Vector q;
    Vector v;
    double S = 0.0;
    double N = 0.0;
};

using StateSampler = std::function<SampledState(std::mt19937_64&)>;

/// A named built-in model; exactly one of `closed` / `open` is set.
struct BuiltModel {
    std::string name;
    std::optional<ThermoModel> closed;
    std::optional<OpenModel> open;
    StateSampler sampler;
};

/// Names accepted by build_builtin, in listing order.
std::vector<std::string> builtin_names();

/// Default parameters of a built-in, in the JSON shape build_builtin
/// accepts. Throws ConfigError for unknown names.
nlohmann::json builtin_default_params(const std::string& name);

/// Builds a built-in from JSON parameters merged over the defaults. Unknown
/// model names and unknown, mistyped, or invalid parameter values throw
/// ConfigError naming the offending key. Each constructed model passes a
/// finite-difference validation gate before being returned.
BuiltModel build_builtin(const std::string& name, const nlohmann::json& params);

}  // namespace dirac_thermo
