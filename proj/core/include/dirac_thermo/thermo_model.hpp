#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "dirac_thermo/errors.hpp"
#include "dirac_thermo/subspace.hpp"

namespace dirac_thermo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A simple thermodynamic system with one entropy variable:
/// configuration q in R^n, velocity v, entropy S, Lagrangian L(q,v,S),
/// friction and external force covectors, and m linear velocity constraint
/// one-forms (rows of constraint_forms(q), with <omega^r(q), qdot> = 0).
///
/// Temperature is T = -dL/dS and must stay above `temperature_floor`;
/// evaluators are expected to throw ModelDomainError outside their domain
/// (for example nonpositive gas volume).
struct ThermoModel {
    Eigen::Index n = 0;  ///< mechanical degrees of freedom
    Eigen::Index m = 0;  ///< independent constraint one-forms, m < n
    std::string name;

    std::function<double(const Vector& q, const Vector& v, double S)> lagrangian;
    std::function<Vector(const Vector& q, const Vector& v, double S)> dL_dq;
    std::function<Vector(const Vector& q, const Vector& v, double S)> dL_dv;
    std::function<double(const Vector& q, const Vector& v, double S)> dL_dS;
    std::function<Matrix(const Vector& q, const Vector& v, double S)> d2L_dv2;

    /// Friction covector F^fr(q, v, S); dissipative models satisfy
    /// <F^fr, v> <= 0.
    std::function<Vector(const Vector& q, const Vector& v, double S)> friction_force;

    /// External force covector F^ext(t, q, v, S).
    std::function<Vector(double t, const Vector& q, const Vector& v, double S)> external_force;

    /// Constraint one-forms as an m x n matrix; required when m > 0.
    std::function<Matrix(const Vector& q)> constraint_forms;

    /// Optional analytic d/dt omega(q(t)) along qdot = v (m x n). When absent
    /// the engine falls back to a central finite difference in the v direction.
    std::function<Matrix(const Vector& q, const Vector& v)> constraint_forms_dot;

    double temperature_floor = 1e-6;

    /// T = -dL/dS; throws ModelDomainError at or below the floor.
    double temperature(const Vector& q, const Vector& v, double S) const;

    /// omega(q) with a row-rank check (ConstraintRankError on deficiency).
    /// Returns a 0 x n matrix when m == 0.
    Matrix constraints_checked(const Vector& q) const;

    /// d/dt omega along v: analytic hook when supplied, otherwise a central
    /// finite difference with the given step.
    Matrix constraint_rate(const Vector& q, const Vector& v, double fd_step = 1e-6) const;
};

/// State of the extended variational bundle: position (q,S), velocity (v,W),
/// momentum (p, Lambda).
struct PontryaginPoint {
    Vector q;
    double S = 0.0;
    Vector v;
    double W = 0.0;
    Vector p;
    double Lambda = 0.0;
};

/// The (m+1) x (n+1) matrix whose null space is the variational constraint
/// C_V at (q,v,S): rows [omega^r(q) | 0] for the mechanical constraints and
/// [-F^fr | dL/dS] for the thermodynamic displacement constraint
/// (dL/dS dS = <F^fr, dq>).
struct VariationalConstraintMatrix {
    Matrix rows;  ///< (m+1) x (n+1)
};

/// Assembles the variational constraint matrix. Throws ModelDomainError when
/// the temperature is at or below the floor and ConstraintRankError when
/// omega(q) loses row rank.
VariationalConstraintMatrix variational_constraint(const ThermoModel& model, const Vector& q,
                                                   const Vector& v, double S);

/// The subspace C_V(q,v,S) in R^{n+1} (dimension n - m).
Subspace variational_constraint_space(const ThermoModel& model, const Vector& q, const Vector& v,
                                      double S);

/// Annihilator of C_V in covectors on R^{n+1} (dimension m + 1); computed as
/// the annihilator of the null space of the variational constraint matrix.
Subspace annihilator_of_CV(const ThermoModel& model, const Vector& q, const Vector& v, double S);

/// Residual of the kinematic constraints at (q, v, S, Sdot): the m values
/// <omega^r(q), v> followed by dL/dS * Sdot - <F^fr, v>.
Vector kinematic_residual(const ThermoModel& model, const Vector& q, const Vector& v, double S,
                          double Sdot);

/// Fiber Legendre transform p = dL/dv(q, v, S).
Vector partial_legendre(const ThermoModel& model, const Vector& q, const Vector& v, double S);

/// Newton inversion of the fiber Legendre transform: finds v with
/// dL/dv(q, v, S) = p to tolerance 1e-10 * (1 + |p|). Starts from `guess`
/// (zero when omitted). Throws LegendreInversionError after max_iter steps.
Vector inverse_legendre(const ThermoModel& model, const Vector& q, const Vector& p, double S,
                        const Vector& guess, int max_iter = 50);
Vector inverse_legendre(const ThermoModel& model, const Vector& q, const Vector& p, double S);

/// Relative disagreement between analytic derivatives and central finite
/// differences at one state. Block errors are
/// max|analytic - fd| / max(1, max|fd|); the Hessian block differences
/// dL/dv once rather than L twice.
struct GradientCheckReport {
    double dq_error = 0.0;
    double dv_error = 0.0;
    double dS_error = 0.0;
    double hessian_error = 0.0;
    double worst() const;
};

GradientCheckReport gradient_check(const ThermoModel& model, const Vector& q, const Vector& v,
                                   double S, double h = 1e-5);

/// Registration gate: runs gradient_check at each supplied state and throws
/// ModelValidationError if any block error exceeds `threshold` (default the
/// registration threshold 1e-4) or an evaluator output has a wrong shape.
void validate_model(const ThermoModel& model,
                    const std::vector<std::tuple<Vector, Vector, double>>& states,
                    double h = 1e-5, double threshold = 1e-4);

}  // namespace dirac_thermo
