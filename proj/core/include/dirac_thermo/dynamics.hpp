#pragma once

#include <utility>

#include "dirac_thermo/kkt.hpp"
#include "dirac_thermo/trajectory.hpp"

namespace dirac_thermo {

enum class Scheme {
    rk4,
    implicit_midpoint,
};

/// Tangent/rate data along a curve on the extended bundle, matching
/// PontryaginPoint slot for slot.
struct PontryaginRate {
    Vector qdot;
    double Sdot = 0.0;
    Vector vdot;
    double Wdot = 0.0;
    Vector pdot;
    double Lambdadot = 0.0;
};

/// Covector on the extended bundle, one component per PontryaginPoint slot.
struct PontryaginCovector {
    Vector dq;
    double dS = 0.0;
    Vector dv;
    double dW = 0.0;
    Vector dp;
    double dLambda = 0.0;
};

/// The generalized energy of the extended bundle,
/// E(q,S,v,W,p,Lambda) = <p,v> + Lambda*W - L(q,v,S). At consistent points
/// (p = dL/dv, Lambda = 0) its value is the physical energy <p,v> - L.
struct GeneralizedEnergy {
    const ThermoModel* model = nullptr;
    double value(const PontryaginPoint& x) const;
    /// Coordinate differential
    /// (-dL/dq, -dL/dS, p - dL/dv, Lambda, v, W).
    PontryaginCovector differential(const PontryaginPoint& x) const;
};

/// Physical energy E = <dL/dv, v> - L at a base state.
double physical_energy(const ThermoModel& model, const Vector& q, const Vector& v, double S);

/// dE - F^ext in coordinates: the external force covector only occupies the
/// q slot, so the result is (-dL/dq - F^ext, -dL/dS, p - dL/dv, Lambda, v, W).
PontryaginCovector energy_force_covector(const ThermoModel& model, double t,
                                         const PontryaginPoint& x);

/// The instantaneous evolution field at a consistent state: qdot = v,
/// (vdot, mu) from the saddle solve, Sdot from the entropy closure,
/// pdot = d/dt[dL/dv] along the field, Lambdadot = 0.
std::pair<PontryaginRate, Vector> instantaneous_rate(const ThermoModel& model, double t,
                                                     const PontryaginPoint& x,
                                                     const SolverOptions& opts = {});

/// Max violation over the condition groups characterizing membership of
/// ((x, xdot), dE - F^ext) in the induced Dirac structure:
///   1. dL/dS (pdot - dL/dq - F^ext) + (Lambdadot + T) F^fr with T = -dL/dS,
///      paired against an orthonormal basis of the constraint distribution;
///   2. the entropy closure dL/dS * Sdot = <F^fr, qdot>;
///   3. p = dL/dv;
///   4. Lambda = 0;
///   5. v = qdot and <omega^r(q), qdot> = 0;
///   6. W = Sdot.
/// Unnormalized; `mu` is accepted for signature completeness (the annihilator
/// pairing eliminates the reaction force without it).
double dirac_residual(const ThermoModel& model, double t, const PontryaginPoint& x,
                      const PontryaginRate& xdot, const Vector& mu);

/// The differential of L pushed to a covector on T*Q: base point
/// (q, S, dL/dv, 0) with covector components (-dL/dq, -dL/dS, v, W).
struct DiracDifferential {
    Vector q;
    double S = 0.0;
    Vector p;
    double Lambda = 0.0;
    Vector cov_q;
    double cov_S = 0.0;
    Vector cov_p;
    double cov_Lambda = 0.0;
};

DiracDifferential dirac_differential(const ThermoModel& model, const Vector& q, double S,
                                     const Vector& v, double W);

/// Cotangent-side state (q, S, p, Lambda) and its rate.
struct CotangentPoint {
    Vector q;
    double S = 0.0;
    Vector p;
    double Lambda = 0.0;
};

struct CotangentRate {
    Vector qdot;
    double Sdot = 0.0;
    Vector pdot;
    double Lambdadot = 0.0;
};

/// Velocity-side companion point (q, S, v, W); the fibers must match the
/// cotangent point through the Legendre transform.
struct CotangentVelocity {
    Vector v;
    double W = 0.0;
};

/// Max violation of the cotangent-bundle evolution conditions, the
/// hyperregular mirror of dirac_residual. The velocity is recovered through
/// inverse_legendre seeded with y.v; the entropy condition reads
/// T(q,p,S) Sdot = -<F^fr, qdot> and is reported unnormalized (a Sdot
/// perturbation of size d raises the residual by T*d). Vanishes exactly
/// where dirac_residual does.
double cotangent_residual(const ThermoModel& model, double t, const CotangentPoint& z,
                          const CotangentRate& zdot, const CotangentVelocity& y);

/// Transport of an accepted sample to the cotangent formulation followed by
/// cotangent_residual.
double cotangent_residual_at_sample(const ThermoModel& model, double t, const PontryaginPoint& x,
                                    const PontryaginRate& xdot);

struct StepResult {
    PontryaginPoint state;
    Vector mu;
    StepReport report;
};

/// Advances one step of the configured scheme, then recomputes the dependent
/// slots: optional exact velocity projection onto null(omega), kernel
/// velocity restoration, p = dL/dv, W = Sdot, Lambda = 0.
/// `work_increment`, when non-null, receives the quadrature of <F^ext, qdot>
/// over the step. Throws ModelDomainError/KKTSingularError from any stage.
StepResult step(const ThermoModel& model, double t, const PontryaginPoint& state, double dt,
                Scheme scheme = Scheme::rk4, const SolverOptions& opts = {},
                double* work_increment = nullptr);

struct SimulationInput {
    Vector q0;
    Vector v0;
    double S0 = 0.0;
    double t0 = 0.0;
    double t1 = 1.0;
    double dt = 1e-3;
    Scheme scheme = Scheme::rk4;
    SolverOptions options;
};

/// Fixed-grid integration with diagnostics at every accepted step. Failed
/// steps retry with halved substeps (options.halving_max_depth); if a step
/// still fails the partial trajectory is returned with the failure marker
/// set. Throws InitialStateError when the initial velocity violates the
/// mechanical constraints beyond options.constraint_tol.
Trajectory simulate(const ThermoModel& model, const SimulationInput& input);

struct EnergyBalanceReport {
    std::vector<double> series;  ///< per-interval |dE - work increment|
    double max_defect = 0.0;
};

/// First-law audit: compares per-interval energy changes against the work
/// integral accumulated with the integrator's own quadrature.
EnergyBalanceReport energy_balance_report(const ThermoModel& model, const Trajectory& traj);

}  // namespace dirac_thermo
