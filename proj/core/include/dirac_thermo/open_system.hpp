#pragma once

#include <functional>
#include <vector>

#include "dirac_thermo/dynamics.hpp"

namespace dirac_thermo {

/// Instantaneous state of an open system, including the time coordinate so
/// port evaluators and external forces may be time dependent.
struct OpenState {
    double t = 0.0;
    Vector q;
    Vector v;
    double S = 0.0;
    double N = 0.0;
};

/// Matter port: carries matter flux J at chemical potential mu and
/// temperature T, together with the entropy flux J_S it advects.
struct Port {
    std::function<double(const OpenState&)> chemical_potential;  ///< mu^a
    std::function<double(const OpenState&)> temperature;         ///< T^a > 0
    std::function<double(const OpenState&)> matter_flux;         ///< J^a
    std::function<double(const OpenState&)> entropy_flux;        ///< J_S^a
};

/// Heat source: entropy flux J_S at source temperature T.
struct HeatSource {
    std::function<double(const OpenState&)> temperature;   ///< T^b > 0
    std::function<double(const OpenState&)> entropy_flux;  ///< J_S^b
};

/// Simple open system: the closed-system data extended with a mole-number
/// argument N (evaluators gain dL/dN), plus matter ports and heat sources.
/// The closed limit (no ports, no sources) reproduces ThermoModel behavior
/// exactly through closed_view.
struct OpenModel {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    std::string name;

    std::function<double(const Vector& q, const Vector& v, double S, double N)> lagrangian;
    std::function<Vector(const Vector& q, const Vector& v, double S, double N)> dL_dq;
    std::function<Vector(const Vector& q, const Vector& v, double S, double N)> dL_dv;
    std::function<double(const Vector& q, const Vector& v, double S, double N)> dL_dS;
    std::function<double(const Vector& q, const Vector& v, double S, double N)> dL_dN;
    std::function<Matrix(const Vector& q, const Vector& v, double S, double N)> d2L_dv2;
    std::function<Vector(const Vector& q, const Vector& v, double S, double N)> friction_force;
    std::function<Vector(double t, const Vector& q, const Vector& v, double S, double N)>
        external_force;
    std::function<Matrix(const Vector& q)> constraint_forms;
    std::function<Matrix(const Vector& q, const Vector& v)> constraint_forms_dot;

    std::vector<Port> ports;
    std::vector<HeatSource> heat_sources;

    double temperature_floor = 1e-6;

    /// The closed system at frozen mole number: a ThermoModel whose
    /// evaluators call this model's evaluators with N bound. Copies the
    /// evaluators, so the view stays valid independently of this object.
    ThermoModel closed_view(double N) const;

    /// System temperature T = -dL/dS (floor-guarded) and chemical potential
    /// mu = -dL/dN.
    double temperature(const OpenState& s) const;
    double chemical_potential(const OpenState& s) const;
};

struct OpenRates {
    Vector vdot;
    Vector mu;
    double Sdot = 0.0;
    double Ndot = 0.0;
};

/// Full right-hand side of the open evolution: (vdot, mu) from the closed
/// mechanical saddle solve at frozen N, Ndot as the sum of matter fluxes,
/// and Sdot solved explicitly from the open entropy balance
///   dL/dS (Sdot - sum J_S^a - sum J_S^b) =
///     <F^fr, v> - sum_a [J^a (dL/dN + mu^a) + J_S^a (dL/dS + T^a)]
///              - sum_b J_S^b (dL/dS + T^b).
/// With no ports and no sources, Sdot is computed by the closed entropy_rate
/// on closed_view (identical arithmetic to the closed engine).
OpenRates open_rhs(const OpenModel& model, const OpenState& s, const SolverOptions& opts = {});

/// Internal entropy production
///   I = (1/T) ( -<F^fr, v> + sum_a [J^a (mu^a - mu) + J_S^a (T^a - T)]
///             + sum_b J_S^b (T^b - T) ),
/// with T = -dL/dS and mu = -dL/dN the system's own potentials. Satisfies
/// Sdot = I + sum J_S^a + sum J_S^b against open_rhs to floating-point
/// accuracy, and I >= 0 for dissipative friction with linear flux laws of
/// nonnegative conductance.
double internal_entropy_production(const OpenModel& model, const OpenState& s);

struct PowerDecomposition {
    double P_W = 0.0;  ///< mechanical power <F^ext, v>
    double P_H = 0.0;  ///< heating power sum_b J_S^b T^b
    double P_M = 0.0;  ///< matter power sum_a (J^a mu^a + J_S^a T^a)
};

PowerDecomposition external_power_decomposition(const OpenModel& model, const OpenState& s);

/// Physical energy E = <dL/dv, v> - L(q, v, S, N).
double open_energy(const OpenModel& model, const OpenState& s);

/// Covariant state on the extended bundle with time adjoined. The momentum
/// conjugate to time is pinned to the zero level set of the covariant
/// generalized energy: p_time = L - <p, v>.
struct CovariantPoint {
    double t = 0.0;
    Vector q;
    double S = 0.0;
    double N = 0.0;
    Vector v;
    double p_time = 0.0;
    Vector p;
};

CovariantPoint covariant_point(const OpenModel& model, const OpenState& s);

struct OpenSimulationInput {
    Vector q0;
    Vector v0;
    double S0 = 0.0;
    double N0 = 0.0;
    double t0 = 0.0;
    double t1 = 1.0;
    double dt = 1e-3;
    Scheme scheme = Scheme::rk4;
    SolverOptions options;
};

/// Open-system integration with the same schemes and step policy as the
/// closed simulate; produces a Trajectory with the open extension columns
/// filled. With no ports and no sources the run delegates to the closed
/// engine on closed_view(N0), making the closed-limit trajectory identical
/// in every shared quantity.
Trajectory open_simulate(const OpenModel& model, const OpenSimulationInput& input);

struct OpenEnergyBalanceReport {
    std::vector<double> series;  ///< per-interval |dE - (W + H + M increments)|
    double max_defect = 0.0;
};

/// Open first-law audit: energy changes against the quadrature of
/// P_W + P_H + P_M accumulated during integration.
OpenEnergyBalanceReport open_energy_balance_report(const OpenModel& model,
                                                   const Trajectory& traj);

}  // namespace dirac_thermo
