#include "dirac_thermo/dynamics.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "engine_detail.hpp"
#include "flat_rk4.hpp"

namespace dirac_thermo {

double GeneralizedEnergy::value(const PontryaginPoint& x) const {
    return x.p.dot(x.v) + x.Lambda * x.W - model->lagrangian(x.q, x.v, x.S);
}

PontryaginCovector GeneralizedEnergy::differential(const PontryaginPoint& x) const {
    PontryaginCovector d;
    d.dq = -model->dL_dq(x.q, x.v, x.S);
    d.dS = -model->dL_dS(x.q, x.v, x.S);
    d.dv = x.p - model->dL_dv(x.q, x.v, x.S);
    d.dW = x.Lambda;
    d.dp = x.v;
    d.dLambda = x.W;
    return d;
}

double physical_energy(const ThermoModel& model, const Vector& q, const Vector& v, double S) {
    return model.dL_dv(q, v, S).dot(v) - model.lagrangian(q, v, S);
}

PontryaginCovector energy_force_covector(const ThermoModel& model, double t,
                                         const PontryaginPoint& x) {
    GeneralizedEnergy energy{&model};
    PontryaginCovector zeta = energy.differential(x);
    zeta.dq -= model.external_force(t, x.q, x.v, x.S);
    return zeta;
}

std::pair<PontryaginRate, Vector> instantaneous_rate(const ThermoModel& model, double t,
                                                     const PontryaginPoint& x,
                                                     const SolverOptions& opts) {
    const KKTSolution sol = solve_kkt(model, t, x.q, x.v, x.S, opts);
    PontryaginRate rate;
    rate.qdot = x.v;
    rate.Sdot = entropy_rate(model, x.q, x.v, x.S);
    rate.vdot = sol.vdot;
    rate.Wdot = 0.0;
    rate.pdot = model.d2L_dv2(x.q, x.v, x.S) * sol.vdot +
                convective_momentum_rate(model, x.q, x.v, x.S, rate.Sdot, opts);
    rate.Lambdadot = 0.0;
    return {rate, sol.mu};
}

namespace {

Matrix distribution_basis(const ThermoModel& model, const Vector& q) {
    if (model.m == 0) {
        return Matrix::Identity(model.n, model.n);
    }
    return null_space(model.constraints_checked(q));
}

}  // namespace

namespace detail {

double dirac_residual_core(const ThermoModel& model, double t, const PontryaginPoint& x,
                           const PontryaginRate& xdot, bool include_entropy_closure) {
    const double dLdS = model.dL_dS(x.q, x.v, x.S);
    const Vector friction = model.friction_force(x.q, x.v, x.S);
    const Vector external = model.external_force(t, x.q, x.v, x.S);

    // Force balance against the annihilator of the constraint distribution:
    // dL/dS (pdot - dL/dq - F^ext) + (Lambdadot + T) F^fr must pair to zero
    // with every direction of the distribution, where T = -dL/dS.
    const Vector balance =
        dLdS * (xdot.pdot - model.dL_dq(x.q, x.v, x.S) - external) +
        (xdot.Lambdadot - dLdS) * friction;
    const Matrix basis = distribution_basis(model, x.q);
    double worst = (basis.transpose() * balance).lpNorm<Eigen::Infinity>();

    // Phenomenological entropy closure along the curve. Skipped when the
    // caller replaces it with an open-system balance.
    if (include_entropy_closure) {
        worst = std::max(worst, std::abs(dLdS * xdot.Sdot - friction.dot(xdot.qdot)));
    }

    // Fiber conditions: beta = 0 and Upsilon = 0.
    worst = std::max(worst,
                     (x.p - model.dL_dv(x.q, x.v, x.S)).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, std::abs(x.Lambda));

    // u = qdot inside the distribution.
    worst = std::max(worst, (xdot.qdot - x.v).lpNorm<Eigen::Infinity>());
    if (model.m > 0) {
        worst = std::max(worst, (model.constraints_checked(x.q) * xdot.qdot)
                                    .lpNorm<Eigen::Infinity>());
    }

    // Psi = Sdot.
    worst = std::max(worst, std::abs(x.W - xdot.Sdot));
    return worst;
}

}  // namespace detail

double dirac_residual(const ThermoModel& model, double t, const PontryaginPoint& x,
                      const PontryaginRate& xdot, const Vector& mu) {
    (void)mu;  // the annihilator pairing eliminates the reaction force
    return detail::dirac_residual_core(model, t, x, xdot, true);
}

DiracDifferential dirac_differential(const ThermoModel& model, const Vector& q, double S,
                                     const Vector& v, double W) {
    DiracDifferential d;
    d.q = q;
    d.S = S;
    d.p = model.dL_dv(q, v, S);
    d.Lambda = 0.0;
    d.cov_q = -model.dL_dq(q, v, S);
    d.cov_S = -model.dL_dS(q, v, S);
    d.cov_p = v;
    d.cov_Lambda = W;
    return d;
}

double cotangent_residual(const ThermoModel& model, double t, const CotangentPoint& z,
                          const CotangentRate& zdot, const CotangentVelocity& y) {
    const Vector v = inverse_legendre(model, z.q, z.p, z.S, y.v);
    const double T = model.temperature(z.q, v, z.S);
    const Vector friction = model.friction_force(z.q, v, z.S);
    const Vector external = model.external_force(t, z.q, v, z.S);

    const Vector balance =
        zdot.pdot - model.dL_dq(z.q, v, z.S) - external - friction;
    const Matrix basis = distribution_basis(model, z.q);
    double worst = (basis.transpose() * balance).lpNorm<Eigen::Infinity>();

    // T(q,p,S) Sdot = -<F^fr(q,p,S), qdot>.
    worst = std::max(worst, std::abs(T * zdot.Sdot + friction.dot(zdot.qdot)));

    // Hamiltonian velocity condition qdot = v(q,p,S), inside the
    // distribution.
    worst = std::max(worst, (zdot.qdot - v).lpNorm<Eigen::Infinity>());
    if (model.m > 0) {
        worst = std::max(worst, (model.constraints_checked(z.q) * zdot.qdot)
                                    .lpNorm<Eigen::Infinity>());
    }

    // Fiber matching: p = dL/dv at the companion velocity point, Lambda
    // pinned to 0, W tracking Sdot.
    worst = std::max(worst,
                     (z.p - model.dL_dv(z.q, y.v, z.S)).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, std::abs(z.Lambda));
    worst = std::max(worst, std::abs(zdot.Lambdadot));
    worst = std::max(worst, std::abs(y.W - zdot.Sdot));
    return worst;
}

double cotangent_residual_at_sample(const ThermoModel& model, double t, const PontryaginPoint& x,
                                    const PontryaginRate& xdot) {
    CotangentPoint z{x.q, x.S, x.p, x.Lambda};
    CotangentRate zdot{xdot.qdot, xdot.Sdot, xdot.pdot, xdot.Lambdadot};
    CotangentVelocity y{x.v, x.W};
    return cotangent_residual(model, t, z, zdot, y);
}

namespace detail {

SampleWithCondition make_closed_sample(const ThermoModel& model, double t,
                                       const PontryaginPoint& x, const SolverOptions& opts) {
    SampleWithCondition out;
    const KKTSolution sol = solve_kkt(model, t, x.q, x.v, x.S, opts);
    PontryaginRate rate;
    rate.qdot = x.v;
    rate.Sdot = entropy_rate(model, x.q, x.v, x.S);
    rate.vdot = sol.vdot;
    rate.Wdot = 0.0;
    rate.pdot = model.d2L_dv2(x.q, x.v, x.S) * sol.vdot +
                convective_momentum_rate(model, x.q, x.v, x.S, rate.Sdot, opts);
    rate.Lambdadot = 0.0;

    out.sample.t = t;
    out.sample.state = x;
    out.sample.mu = sol.mu;
    out.sample.energy = x.p.dot(x.v) - model.lagrangian(x.q, x.v, x.S);
    out.sample.entropy_rate = rate.Sdot;
    out.sample.constraint_residuals = model.constraints_checked(x.q) * x.v;
    out.sample.dirac_residual = dirac_residual(model, t, x, rate, sol.mu);
    out.sample.power_ext = model.external_force(t, x.q, x.v, x.S).dot(x.v);
    out.kkt_condition = sol.condition_estimate;
    return out;
}

}  // namespace detail

namespace {

Vector pack_closed(const Vector& q, const Vector& v, double S) {
    Vector y(2 * q.size() + 1);
    y.head(q.size()) = q;
    y.segment(q.size(), q.size()) = v;
    y(2 * q.size()) = S;
    return y;
}

struct RK4Outcome {
    Vector q;
    Vector v;
    double S = 0.0;
    double work = 0.0;
    double max_condition = 0.0;
};

/// One raw classical Runge-Kutta step on (q, v, S). Each stage restores
/// kernel velocity components before evaluating the field, which makes the
/// scheme the classical one applied to the index-reduced ODE.
RK4Outcome rk4_raw_step(const ThermoModel& model, double t, const Vector& q0, const Vector& v0,
                        double S0, double h, const SolverOptions& opts) {
    const Eigen::Index n = model.n;
    std::array<double, 4> powers{};
    int stage = 0;
    double max_condition = 0.0;

    const auto deriv = [&](double tt, const Vector& y) -> Vector {
        const Vector q = y.head(n);
        Vector v = y.segment(n, n);
        const double S = y(2 * n);
        v = restore_kernel_velocities(model, tt, q, v, S, opts);
        const KKTSolution sol = solve_kkt(model, tt, q, v, S, opts);
        max_condition = std::max(max_condition, sol.condition_estimate);
        const double Sdot = entropy_rate(model, q, v, S);
        powers[static_cast<std::size_t>(stage++)] =
            model.external_force(tt, q, v, S).dot(v);
        Vector dy(2 * n + 1);
        dy.head(n) = v;
        dy.segment(n, n) = sol.vdot;
        dy(2 * n) = Sdot;
        return dy;
    };

    const detail::FlatRK4Step st = detail::rk4_flat(deriv, t, pack_closed(q0, v0, S0), h);
    RK4Outcome out;
    out.q = st.next.head(n);
    out.v = st.next.segment(n, n);
    out.S = st.next(2 * n);
    out.work = detail::rk4_quadrature(h, powers);
    out.max_condition = max_condition;
    return out;
}

struct MidpointOutcome {
    Vector q;
    Vector v;
    double S = 0.0;
    Vector mu;
    double work = 0.0;
    int newton_iters = 0;
};

/// Implicit midpoint step: Newton on the unknowns (q1, v1, S1, mu) with the
/// discrete momentum balance p1 - p0 = h [dL/dq + F^fr + F^ext + omega^T mu]
/// at the midpoint, the discrete entropy closure, and the midpoint velocity
/// constraint omega(q_mid) (q1 - q0) = 0.
MidpointOutcome midpoint_raw_step(const ThermoModel& model, double t, const Vector& q0,
                                  const Vector& v0, double S0, double h,
                                  const SolverOptions& opts) {
    const Eigen::Index n = model.n;
    const Eigen::Index m = model.m;
    const Eigen::Index dim = 2 * n + 1 + m;
    const Vector p0 = model.dL_dv(q0, v0, S0);
    const double tm = t + 0.5 * h;

    const auto residual = [&](const Vector& x) -> Vector {
        const Vector q1 = x.head(n);
        const Vector v1 = x.segment(n, n);
        const double S1 = x(2 * n);
        const Vector mu = x.tail(m);
        const Vector qm = 0.5 * (q0 + q1);
        const Vector vm = 0.5 * (v0 + v1);
        const double Sm = 0.5 * (S0 + S1);

        const Vector friction = model.friction_force(qm, vm, Sm);
        Vector force = model.dL_dq(qm, vm, Sm) + friction +
                       model.external_force(tm, qm, vm, Sm);
        if (m > 0) {
            force += model.constraints_checked(qm).transpose() * mu;
        }

        Vector r(dim);
        r.head(n) = q1 - q0 - h * vm;
        r.segment(n, n) = model.dL_dv(q1, v1, S1) - p0 - h * force;
        r(2 * n) = model.dL_dS(qm, vm, Sm) * (S1 - S0) - friction.dot(q1 - q0);
        if (m > 0) {
            r.tail(m) = model.constraints_checked(qm) * (q1 - q0);
        }
        return r;
    };

    Vector x(dim);
    x.head(n) = q0 + h * v0;
    x.segment(n, n) = v0;
    x(2 * n) = S0;
    x.tail(m).setZero();

    MidpointOutcome out;
    for (int it = 0;; ++it) {
        const Vector r = residual(x);
        if (r.lpNorm<Eigen::Infinity>() <= opts.newton_tol) {
            out.newton_iters = it;
            break;
        }
        if (it >= opts.newton_max_iter) {
            throw KKTSingularError("implicit midpoint Newton iteration did not converge");
        }
        Matrix jac(dim, dim);
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double hj = 1e-7 * (1.0 + std::abs(x(j)));
            Vector xp = x, xm = x;
            xp(j) += hj;
            xm(j) -= hj;
            jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * hj);
        }
        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible()) {
            throw KKTSingularError("implicit midpoint Jacobian is singular");
        }
        x -= lu.solve(r);
    }

    out.q = x.head(n);
    out.v = x.segment(n, n);
    out.S = x(2 * n);
    out.mu = x.tail(m);
    const Vector qm = 0.5 * (q0 + out.q);
    const Vector vm = 0.5 * (v0 + out.v);
    const double Sm = 0.5 * (S0 + out.S);
    out.work = model.external_force(tm, qm, vm, Sm).dot(out.q - q0);
    return out;
}

}  // namespace

StepResult step(const ThermoModel& model, double t, const PontryaginPoint& state, double dt,
                Scheme scheme, const SolverOptions& opts, double* work_increment) {
    StepResult result;
    if (scheme == Scheme::rk4) {
        const RK4Outcome raw = rk4_raw_step(model, t, state.q, state.v, state.S, dt, opts);
        result.state = detail::finalize_state(model, t + dt, raw.q, raw.v, raw.S, opts);
        const KKTSolution sol =
            solve_kkt(model, t + dt, result.state.q, result.state.v, result.state.S, opts);
        result.mu = sol.mu;
        result.report.kkt_condition_estimate = std::max(raw.max_condition,
                                                        sol.condition_estimate);
        if (work_increment) {
            *work_increment = raw.work;
        }
    } else {
        const MidpointOutcome raw =
            midpoint_raw_step(model, t, state.q, state.v, state.S, dt, opts);
        result.state = detail::finalize_state(model, t + dt, raw.q, raw.v, raw.S, opts);
        result.mu = raw.mu;
        result.report.newton_iters = raw.newton_iters;
        if (work_increment) {
            *work_increment = raw.work;
        }
    }
    result.report.accepted = true;
    return result;
}

Trajectory simulate(const ThermoModel& model, const SimulationInput& input) {
    if (!(input.t1 > input.t0)) {
        throw std::invalid_argument("simulation span must satisfy t1 > t0");
    }
    if (!(input.dt > 0.0) || input.dt > (input.t1 - input.t0) * (1.0 + 1e-12)) {
        throw std::invalid_argument("step size must satisfy 0 < dt <= t1 - t0");
    }
    const SolverOptions& opts = input.options;

    const Matrix omega0 = model.constraints_checked(input.q0);
    if (model.m > 0) {
        const double violation = (omega0 * input.v0).lpNorm<Eigen::Infinity>();
        if (violation > opts.constraint_tol *
                            (1.0 + input.v0.lpNorm<Eigen::Infinity>())) {
            std::ostringstream msg;
            msg << "initial velocity violates the mechanical constraints: |omega v| = "
                << violation;
            throw InitialStateError(msg.str());
        }
    }

    Trajectory traj;
    traj.n = model.n;
    traj.m = model.m;

    PontryaginPoint state =
        detail::finalize_state(model, input.t0, input.q0, input.v0, input.S0, opts);
    {
        detail::SampleWithCondition first =
            detail::make_closed_sample(model, input.t0, state, opts);
        traj.samples.push_back(std::move(first.sample));
    }

    const double span = input.t1 - input.t0;
    const auto nsteps =
        static_cast<long>(std::ceil(span / input.dt - 1e-9));
    struct FlatState {
        PontryaginPoint x;
    };

    for (long i = 0; i < nsteps; ++i) {
        const double ti = input.t0 + static_cast<double>(i) * input.dt;
        const double h = (i == nsteps - 1) ? (input.t1 - ti) : input.dt;
        const double t_next =
            (i == nsteps - 1) ? input.t1 : input.t0 + static_cast<double>(i + 1) * input.dt;

        double work = 0.0;
        StepReport report;
        int halvings = 0;
        try {
            const auto step_fn = [&](double tt, const FlatState& s, double hh) -> FlatState {
                double w = 0.0;
                StepResult r = step(model, tt, s.x, hh, input.scheme, opts, &w);
                work += w;
                report.newton_iters += r.report.newton_iters;
                report.kkt_condition_estimate = std::max(report.kkt_condition_estimate,
                                                         r.report.kkt_condition_estimate);
                return FlatState{std::move(r.state)};
            };
            FlatState advanced =
                detail::advance_with_halving(step_fn, ti, FlatState{state}, h,
                                             opts.halving_max_depth, halvings);
            state = std::move(advanced.x);

            detail::SampleWithCondition sampled =
                detail::make_closed_sample(model, t_next, state, opts);
            traj.samples.push_back(std::move(sampled.sample));
        } catch (const Error& e) {
            traj.failed = true;
            std::ostringstream msg;
            msg << "step from t = " << ti << " failed: " << e.what();
            traj.failure_message = msg.str();
            break;
        }
        report.accepted = true;
        report.halvings = halvings;
        traj.step_reports.push_back(report);
        traj.work_increments.push_back(work);
    }
    return traj;
}

EnergyBalanceReport energy_balance_report(const ThermoModel& model, const Trajectory& traj) {
    (void)model;  // energies are stored on the samples
    EnergyBalanceReport report;
    const std::size_t intervals =
        traj.samples.empty() ? 0 : traj.samples.size() - 1;
    report.series.reserve(intervals);
    for (std::size_t i = 0; i < intervals; ++i) {
        const double dE = traj.samples[i + 1].energy - traj.samples[i].energy;
        const double work = i < traj.work_increments.size() ? traj.work_increments[i] : 0.0;
        report.series.push_back(std::abs(dE - work));
        report.max_defect = std::max(report.max_defect, report.series.back());
    }
    return report;
}

}  // namespace dirac_thermo
