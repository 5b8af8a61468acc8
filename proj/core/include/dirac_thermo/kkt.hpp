#pragma once

#include <Eigen/Dense>

#include "dirac_thermo/thermo_model.hpp"

namespace dirac_thermo {

/// Tunables shared by the KKT solver and the time steppers.
struct SolverOptions {
    /// Condition-number ceiling; beyond it solve_kkt throws KKTSingularError.
    double kkt_condition_max = 1e12;
    /// Relative eigenvalue threshold that classifies the projected velocity
    /// Hessian as degenerate.
    double kkt_singular_tol = 1e-10;
    /// Convergence tolerance (relative to the force scale) for kernel
    /// velocity restoration.
    double restore_tol = 1e-12;
    int restore_max_iter = 30;
    /// Step for internal finite differences (convective force terms,
    /// constraint rates, restoration Jacobians).
    double fd_step = 1e-6;
    /// Newton controls for the implicit midpoint scheme.
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    /// Admissibility tolerance for initial states (|omega v| scale).
    double constraint_tol = 1e-8;
    /// Post-step projection of v onto the constraint distribution.
    bool projection = true;
    /// Step-halving retries after a failed step before giving up.
    int halving_max_depth = 6;
};

/// Entropy evolution from the phenomenological closure
/// dL/dS * Sdot = <F^fr, v>. Nonnegative for dissipative friction.
double entropy_rate(const ThermoModel& model, const Vector& q, const Vector& v, double S);

/// The v-dot-free part of d/dt[dL/dv]: (d2L/dqdv) v + (d2L/dSdv) Sdot,
/// evaluated through central directional finite differences of dL/dv.
/// Exactly zero (no difference taken) when v = 0 or the respective
/// dependence is absent with Sdot = 0.
Vector convective_momentum_rate(const ThermoModel& model, const Vector& q, const Vector& v,
                                double S, double Sdot, const SolverOptions& opts = {});

/// The saddle system for the constrained accelerations,
///   [ M       -omega^T ] [vdot]   [ f          ]
///   [ omega    0       ] [ mu ] = [ -omegadot v ],
/// with M = d2L/dv2 and f the generalized force
/// dL/dq + F^fr + F^ext - (d2L/dqdv) v - (d2L/dSdv) Sdot.
/// The mixed second derivatives act through directional finite differences
/// of dL/dv, so models never supply them.
struct KKTSystem {
    Matrix matrix;  ///< (n+m) x (n+m)
    Vector rhs;     ///< (n+m)
    Matrix mass;    ///< M, n x n
    Matrix omega;   ///< m x n
    Vector force;   ///< f, n
};

KKTSystem assemble_kkt(const ThermoModel& model, double t, const Vector& q, const Vector& v,
                       double S, const SolverOptions& opts = {});

/// Kernel of the velocity Hessian restricted to the constraint distribution
/// null(omega) at one state.
struct KernelAnalysis {
    Matrix null_omega;       ///< orthonormal basis of null(omega), n x (n-m)
    Matrix kernel;           ///< ambient kernel directions Y, n x k (possibly k = 0)
    Vector regular_eigs;     ///< positive eigenvalues of the projected Hessian
    Matrix regular_ambient;  ///< ambient eigendirections for regular_eigs
};

/// Eigen-analysis of P^T M P with P = null(omega). Throws KKTSingularError
/// when the projected Hessian is indefinite.
KernelAnalysis mass_kernel(const ThermoModel& model, const Vector& q, const Vector& v, double S,
                           const SolverOptions& opts = {});

struct KKTSolution {
    Vector vdot;
    Vector mu;
    double condition_estimate = 0.0;
    /// True when the projected velocity Hessian was singular and the solve
    /// took the projected path (accelerations on the kernel set to zero,
    /// consistency enforced by kernel velocity restoration).
    bool degenerate = false;
    /// |Y^T (f - M vdot_particular)| on the kernel directions; near zero on
    /// a restored state.
    double kernel_residual = 0.0;
};

/// Solves the saddle system. A positive definite projected Hessian takes a
/// direct LU solve; a positive semidefinite one with nontrivial kernel takes
/// the projected path. Throws KKTSingularError on indefiniteness or when the
/// condition estimate exceeds opts.kkt_condition_max.
KKTSolution solve_kkt(const ThermoModel& model, double t, const Vector& q, const Vector& v,
                      double S, const SolverOptions& opts = {});

/// Adjusts the kernel components of v (directions in null(omega) on which the
/// velocity Hessian vanishes) so the force balance Y^T f(t, q, v, S) = 0
/// holds; non-kernel components are untouched. Identity when the kernel is
/// trivial. Throws KKTSingularError when Newton cannot converge.
Vector restore_kernel_velocities(const ThermoModel& model, double t, const Vector& q,
                                 const Vector& v, double S, const SolverOptions& opts = {});

/// Orthogonal projection of v onto null(omega(q)); identity when m == 0.
Vector project_velocity(const ThermoModel& model, const Vector& q, const Vector& v);

}  // namespace dirac_thermo
