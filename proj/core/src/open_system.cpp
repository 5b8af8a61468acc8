#include "dirac_thermo/open_system.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "engine_detail.hpp"
#include "flat_rk4.hpp"

namespace dirac_thermo {

ThermoModel OpenModel::closed_view(double N) const {
    ThermoModel view;
    view.n = n;
    view.m = m;
    view.name = name;
    view.temperature_floor = temperature_floor;
    view.lagrangian = [f = lagrangian, N](const Vector& q, const Vector& v, double S) {
        return f(q, v, S, N);
    };
    view.dL_dq = [f = dL_dq, N](const Vector& q, const Vector& v, double S) {
        return f(q, v, S, N);
    };
    view.dL_dv = [f = dL_dv, N](const Vector& q, const Vector& v, double S) {
        return f(q, v, S, N);
    };
    view.dL_dS = [f = dL_dS, N](const Vector& q, const Vector& v, double S) {
        return f(q, v, S, N);
    };
    view.d2L_dv2 = [f = d2L_dv2, N](const Vector& q, const Vector& v, double S) {
        return f(q, v, S, N);
    };
    view.friction_force = [f = friction_force, N](const Vector& q, const Vector& v, double S) {
        return f(q, v, S, N);
    };
    view.external_force = [f = external_force, N](double t, const Vector& q, const Vector& v,
                                                  double S) { return f(t, q, v, S, N); };
    view.constraint_forms = constraint_forms;
    view.constraint_forms_dot = constraint_forms_dot;
    return view;
}

double OpenModel::temperature(const OpenState& s) const {
    const double T = -dL_dS(s.q, s.v, s.S, s.N);
    if (!(T > temperature_floor)) {
        std::ostringstream msg;
        msg << "temperature " << T << " at or below floor " << temperature_floor;
        throw ModelDomainError(msg.str());
    }
    return T;
}

double OpenModel::chemical_potential(const OpenState& s) const {
    return -dL_dN(s.q, s.v, s.S, s.N);
}

namespace {

/// Flux sums shared by open_rhs and internal_entropy_production. The
/// affinity terms are accumulated once, in declaration order, so the entropy
/// balance and the production formula see bitwise-identical sums: with
/// mu = -dL/dN and T = -dL/dS, the factors (dL/dN + mu^a) and (mu^a - mu)
/// are the same floating-point value (addition is commutative), and likewise
/// for the temperature affinities.
struct FluxData {
    double sum_matter = 0.0;       ///< sum_a J^a
    double sum_entropy_ports = 0.0;    ///< sum_a J_S^a
    double sum_entropy_sources = 0.0;  ///< sum_b J_S^b
    double affinity_ports = 0.0;   ///< sum_a [J^a (dL/dN + mu^a) + J_S^a (dL/dS + T^a)]
    double affinity_sources = 0.0; ///< sum_b J_S^b (dL/dS + T^b)
    double P_H = 0.0;              ///< sum_b J_S^b T^b
    double P_M = 0.0;              ///< sum_a (J^a mu^a + J_S^a T^a)
};

FluxData gather_fluxes(const OpenModel& model, const OpenState& s, double dLdS, double dLdN) {
    FluxData fx;
    for (const Port& port : model.ports) {
        const double mu_a = port.chemical_potential(s);
        const double T_a = port.temperature(s);
        if (!(T_a > 0.0)) {
            throw ModelDomainError("port temperature must be positive");
        }
        const double J_a = port.matter_flux(s);
        const double JS_a = port.entropy_flux(s);
        fx.sum_matter += J_a;
        fx.sum_entropy_ports += JS_a;
        fx.affinity_ports += J_a * (dLdN + mu_a) + JS_a * (dLdS + T_a);
        fx.P_M += J_a * mu_a + JS_a * T_a;
    }
    for (const HeatSource& source : model.heat_sources) {
        const double T_b = source.temperature(s);
        if (!(T_b > 0.0)) {
            throw ModelDomainError("heat source temperature must be positive");
        }
        const double JS_b = source.entropy_flux(s);
        fx.sum_entropy_sources += JS_b;
        fx.affinity_sources += JS_b * (dLdS + T_b);
        fx.P_H += JS_b * T_b;
    }
    return fx;
}

}  // namespace

OpenRates open_rhs(const OpenModel& model, const OpenState& s, const SolverOptions& opts) {
    const ThermoModel view = model.closed_view(s.N);
    OpenRates rates;
    const KKTSolution sol = solve_kkt(view, s.t, s.q, s.v, s.S, opts);
    rates.vdot = sol.vdot;
    rates.mu = sol.mu;

    if (model.ports.empty() && model.heat_sources.empty()) {
        rates.Sdot = entropy_rate(view, s.q, s.v, s.S);
        rates.Ndot = 0.0;
        return rates;
    }

    model.temperature(s);  // floor guard
    const double dLdS = model.dL_dS(s.q, s.v, s.S, s.N);
    const double dLdN = model.dL_dN(s.q, s.v, s.S, s.N);
    const FluxData fx = gather_fluxes(model, s, dLdS, dLdN);
    const double friction_power = model.friction_force(s.q, s.v, s.S, s.N).dot(s.v);

    rates.Sdot = (fx.sum_entropy_ports + fx.sum_entropy_sources) +
                 (friction_power - fx.affinity_ports - fx.affinity_sources) / dLdS;
    rates.Ndot = fx.sum_matter;
    return rates;
}

double internal_entropy_production(const OpenModel& model, const OpenState& s) {
    const double T = model.temperature(s);
    const double dLdS = model.dL_dS(s.q, s.v, s.S, s.N);
    const double dLdN = model.dL_dN(s.q, s.v, s.S, s.N);
    const FluxData fx = gather_fluxes(model, s, dLdS, dLdN);
    const double friction_power = model.friction_force(s.q, s.v, s.S, s.N).dot(s.v);
    return ((-friction_power) + fx.affinity_ports + fx.affinity_sources) / T;
}

PowerDecomposition external_power_decomposition(const OpenModel& model, const OpenState& s) {
    PowerDecomposition p;
    p.P_W = model.external_force(s.t, s.q, s.v, s.S, s.N).dot(s.v);
    const double dLdS = model.dL_dS(s.q, s.v, s.S, s.N);
    const double dLdN = model.dL_dN(s.q, s.v, s.S, s.N);
    const FluxData fx = gather_fluxes(model, s, dLdS, dLdN);
    p.P_H = fx.P_H;
    p.P_M = fx.P_M;
    return p;
}

double open_energy(const OpenModel& model, const OpenState& s) {
    return model.dL_dv(s.q, s.v, s.S, s.N).dot(s.v) - model.lagrangian(s.q, s.v, s.S, s.N);
}

CovariantPoint covariant_point(const OpenModel& model, const OpenState& s) {
    CovariantPoint c;
    c.t = s.t;
    c.q = s.q;
    c.S = s.S;
    c.N = s.N;
    c.v = s.v;
    c.p = model.dL_dv(s.q, s.v, s.S, s.N);
    c.p_time = model.lagrangian(s.q, s.v, s.S, s.N) - c.p.dot(s.v);
    return c;
}

namespace {

struct OpenFlat {
    Vector q;
    Vector v;
    double S = 0.0;
    double N = 0.0;
};

Vector pack_open(const OpenFlat& s) {
    Vector y(2 * s.q.size() + 2);
    y.head(s.q.size()) = s.q;
    y.segment(s.q.size(), s.q.size()) = s.v;
    y(2 * s.q.size()) = s.S;
    y(2 * s.q.size() + 1) = s.N;
    return y;
}

OpenFlat unpack_open(Eigen::Index n, const Vector& y) {
    OpenFlat s;
    s.q = y.head(n);
    s.v = y.segment(n, n);
    s.S = y(2 * n);
    s.N = y(2 * n + 1);
    return s;
}

struct OpenStepOutcome {
    OpenFlat state;
    double work = 0.0;
    double heat = 0.0;
    double matter = 0.0;
    double max_condition = 0.0;
    int newton_iters = 0;
};

OpenStepOutcome open_rk4_raw_step(const OpenModel& model, double t, const OpenFlat& s0, double h,
                                  const SolverOptions& opts) {
    const Eigen::Index n = model.n;
    std::array<double, 4> stage_W{};
    std::array<double, 4> stage_H{};
    std::array<double, 4> stage_M{};
    int stage = 0;
    double max_condition = 0.0;

    const auto deriv = [&](double tt, const Vector& y) -> Vector {
        OpenFlat f = unpack_open(n, y);
        const ThermoModel view = model.closed_view(f.N);
        f.v = restore_kernel_velocities(view, tt, f.q, f.v, f.S, opts);
        const OpenState st{tt, f.q, f.v, f.S, f.N};
        const OpenRates rates = open_rhs(model, st, opts);
        const PowerDecomposition power = external_power_decomposition(model, st);
        const auto k = static_cast<std::size_t>(stage++);
        stage_W[k] = power.P_W;
        stage_H[k] = power.P_H;
        stage_M[k] = power.P_M;
        const KKTSolution sol = solve_kkt(view, tt, f.q, f.v, f.S, opts);
        max_condition = std::max(max_condition, sol.condition_estimate);
        Vector dy(2 * n + 2);
        dy.head(n) = f.v;
        dy.segment(n, n) = rates.vdot;
        dy(2 * n) = rates.Sdot;
        dy(2 * n + 1) = rates.Ndot;
        return dy;
    };

    const detail::FlatRK4Step st = detail::rk4_flat(deriv, t, pack_open(s0), h);
    OpenStepOutcome out;
    out.state = unpack_open(n, st.next);
    out.work = detail::rk4_quadrature(h, stage_W);
    out.heat = detail::rk4_quadrature(h, stage_H);
    out.matter = detail::rk4_quadrature(h, stage_M);
    out.max_condition = max_condition;
    return out;
}

OpenStepOutcome open_midpoint_raw_step(const OpenModel& model, double t, const OpenFlat& s0,
                                       double h, const SolverOptions& opts) {
    const Eigen::Index n = model.n;
    const Eigen::Index m = model.m;
    const Eigen::Index dim = 2 * n + 2 + m;
    const Vector p0 = model.dL_dv(s0.q, s0.v, s0.S, s0.N);
    const double tm = t + 0.5 * h;
    const ThermoModel view0 = model.closed_view(s0.N);

    const auto residual = [&](const Vector& x) -> Vector {
        const Vector q1 = x.head(n);
        const Vector v1 = x.segment(n, n);
        const double S1 = x(2 * n);
        const double N1 = x(2 * n + 1);
        const Vector mu = x.tail(m);
        const Vector qm = 0.5 * (s0.q + q1);
        const Vector vm = 0.5 * (s0.v + v1);
        const double Sm = 0.5 * (s0.S + S1);
        const double Nm = 0.5 * (s0.N + N1);
        const OpenState mid{tm, qm, vm, Sm, Nm};

        Vector force = model.dL_dq(qm, vm, Sm, Nm) + model.friction_force(qm, vm, Sm, Nm) +
                       model.external_force(tm, qm, vm, Sm, Nm);
        if (m > 0) {
            force += view0.constraints_checked(qm).transpose() * mu;
        }
        const OpenRates mid_rates = open_rhs(model, mid, opts);

        Vector r(dim);
        r.head(n) = q1 - s0.q - h * vm;
        r.segment(n, n) = model.dL_dv(q1, v1, S1, N1) - p0 - h * force;
        r(2 * n) = S1 - s0.S - h * mid_rates.Sdot;
        r(2 * n + 1) = N1 - s0.N - h * mid_rates.Ndot;
        if (m > 0) {
            r.tail(m) = view0.constraints_checked(qm) * (q1 - s0.q);
        }
        return r;
    };

    Vector x(dim);
    x.head(n) = s0.q + h * s0.v;
    x.segment(n, n) = s0.v;
    x(2 * n) = s0.S;
    x(2 * n + 1) = s0.N;
    x.tail(m).setZero();

    OpenStepOutcome out;
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

    out.state.q = x.head(n);
    out.state.v = x.segment(n, n);
    out.state.S = x(2 * n);
    out.state.N = x(2 * n + 1);
    const Vector qm = 0.5 * (s0.q + out.state.q);
    const Vector vm = 0.5 * (s0.v + out.state.v);
    const double Sm = 0.5 * (s0.S + out.state.S);
    const double Nm = 0.5 * (s0.N + out.state.N);
    const OpenState mid{tm, qm, vm, Sm, Nm};
    out.work = model.external_force(tm, qm, vm, Sm, Nm).dot(out.state.q - s0.q);
    const PowerDecomposition power = external_power_decomposition(model, mid);
    out.heat = h * power.P_H;
    out.matter = h * power.P_M;
    return out;
}

/// Finalizes an open state after a step: projection and restoration on the
/// frozen-N view, then the dependent slots with the open entropy rate.
PontryaginPoint open_finalize(const OpenModel& model, double t, const OpenFlat& f,
                              const SolverOptions& opts, double* W_out) {
    const ThermoModel view = model.closed_view(f.N);
    Vector v = f.v;
    if (opts.projection) {
        v = project_velocity(view, f.q, v);
    }
    v = restore_kernel_velocities(view, t, f.q, v, f.S, opts);
    const OpenState st{t, f.q, v, f.S, f.N};
    const OpenRates rates = open_rhs(model, st, opts);
    PontryaginPoint x;
    x.q = f.q;
    x.S = f.S;
    x.v = v;
    x.W = rates.Sdot;
    x.p = view.dL_dv(f.q, v, f.S);
    x.Lambda = 0.0;
    if (W_out) {
        *W_out = rates.Sdot;
    }
    return x;
}

struct OpenSampleWithCondition {
    TrajectorySample sample;
    OpenSample extra;
    double kkt_condition = 0.0;
};

/// Sample diagnostics for the general open path. The membership residual
/// keeps the closed groups but replaces the closed entropy closure with the
/// residual of the open entropy balance, which is the equation the entropy
/// rate actually solves here.
OpenSampleWithCondition make_open_sample(const OpenModel& model, double t,
                                         const PontryaginPoint& x, double N,
                                         const SolverOptions& opts) {
    OpenSampleWithCondition out;
    const ThermoModel view = model.closed_view(N);
    const OpenState st{t, x.q, x.v, x.S, N};
    const KKTSolution sol = solve_kkt(view, t, x.q, x.v, x.S, opts);
    const OpenRates rates = open_rhs(model, st, opts);

    PontryaginRate rate;
    rate.qdot = x.v;
    rate.Sdot = rates.Sdot;
    rate.vdot = sol.vdot;
    rate.Wdot = 0.0;
    rate.pdot = view.d2L_dv2(x.q, x.v, x.S) * sol.vdot +
                convective_momentum_rate(view, x.q, x.v, x.S, rates.Sdot, opts);
    if (rates.Ndot != 0.0) {
        const double hN = opts.fd_step * std::max(std::abs(N), 1e-12);
        rate.pdot += rates.Ndot *
                     (model.dL_dv(x.q, x.v, x.S, N + hN) - model.dL_dv(x.q, x.v, x.S, N - hN)) /
                     (2.0 * hN);
    }
    rate.Lambdadot = 0.0;

    double membership = detail::dirac_residual_core(view, t, x, rate, false);
    {
        const double dLdS = model.dL_dS(x.q, x.v, x.S, N);
        const double dLdN = model.dL_dN(x.q, x.v, x.S, N);
        const FluxData fx = gather_fluxes(model, st, dLdS, dLdN);
        const double friction_power = model.friction_force(x.q, x.v, x.S, N).dot(x.v);
        const double open_balance = std::abs(
            dLdS * (rates.Sdot - fx.sum_entropy_ports - fx.sum_entropy_sources) -
            (friction_power - fx.affinity_ports - fx.affinity_sources));
        membership = std::max(membership, open_balance);
    }

    out.sample.t = t;
    out.sample.state = x;
    out.sample.mu = sol.mu;
    out.sample.energy = open_energy(model, st);
    out.sample.entropy_rate = rates.Sdot;
    out.sample.constraint_residuals = view.constraints_checked(x.q) * x.v;
    out.sample.dirac_residual = membership;
    out.sample.power_ext = view.external_force(t, x.q, x.v, x.S).dot(x.v);

    out.extra.N = N;
    out.extra.internal_production = internal_entropy_production(model, st);
    const PowerDecomposition power = external_power_decomposition(model, st);
    out.extra.P_W = power.P_W;
    out.extra.P_H = power.P_H;
    out.extra.P_M = power.P_M;
    out.extra.p_time = covariant_point(model, st).p_time;
    out.kkt_condition = sol.condition_estimate;
    return out;
}

}  // namespace

Trajectory open_simulate(const OpenModel& model, const OpenSimulationInput& input) {
    if (!(input.t1 > input.t0)) {
        throw std::invalid_argument("simulation span must satisfy t1 > t0");
    }
    if (!(input.dt > 0.0) || input.dt > (input.t1 - input.t0) * (1.0 + 1e-12)) {
        throw std::invalid_argument("step size must satisfy 0 < dt <= t1 - t0");
    }
    const SolverOptions& opts = input.options;

    if (model.ports.empty() && model.heat_sources.empty()) {
        // Closed limit: defer to the closed engine on the frozen-N view so
        // the shared state components follow the identical arithmetic path,
        // then fill the open columns as diagnostics of the closed samples.
        const ThermoModel view = model.closed_view(input.N0);
        SimulationInput closed_input;
        closed_input.q0 = input.q0;
        closed_input.v0 = input.v0;
        closed_input.S0 = input.S0;
        closed_input.t0 = input.t0;
        closed_input.t1 = input.t1;
        closed_input.dt = input.dt;
        closed_input.scheme = input.scheme;
        closed_input.options = input.options;
        Trajectory traj = simulate(view, closed_input);
        traj.open = true;
        traj.open_samples.reserve(traj.samples.size());
        for (const TrajectorySample& sample : traj.samples) {
            const OpenState st{sample.t, sample.state.q, sample.state.v, sample.state.S,
                               input.N0};
            OpenSample extra;
            extra.N = input.N0;
            extra.internal_production = internal_entropy_production(model, st);
            extra.P_W = sample.power_ext;
            extra.P_H = 0.0;
            extra.P_M = 0.0;
            extra.p_time = covariant_point(model, st).p_time;
            traj.open_samples.push_back(extra);
        }
        traj.heat_increments.assign(traj.work_increments.size(), 0.0);
        traj.matter_increments.assign(traj.work_increments.size(), 0.0);
        return traj;
    }

    Trajectory traj;
    traj.n = model.n;
    traj.m = model.m;
    traj.open = true;

    {
        const ThermoModel view = model.closed_view(input.N0);
        if (model.m > 0) {
            const double violation =
                (view.constraints_checked(input.q0) * input.v0).lpNorm<Eigen::Infinity>();
            if (violation > opts.constraint_tol *
                                (1.0 + input.v0.lpNorm<Eigen::Infinity>())) {
                std::ostringstream msg;
                msg << "initial velocity violates the mechanical constraints: |omega v| = "
                    << violation;
                throw InitialStateError(msg.str());
            }
        }
    }

    OpenFlat flat{input.q0, input.v0, input.S0, input.N0};
    PontryaginPoint state = open_finalize(model, input.t0, flat, opts, nullptr);
    flat.v = state.v;
    {
        OpenSampleWithCondition first =
            make_open_sample(model, input.t0, state, flat.N, opts);
        traj.samples.push_back(std::move(first.sample));
        traj.open_samples.push_back(first.extra);
    }

    const double span = input.t1 - input.t0;
    const auto nsteps = static_cast<long>(std::ceil(span / input.dt - 1e-9));

    for (long i = 0; i < nsteps; ++i) {
        const double ti = input.t0 + static_cast<double>(i) * input.dt;
        const double h = (i == nsteps - 1) ? (input.t1 - ti) : input.dt;
        const double t_next =
            (i == nsteps - 1) ? input.t1 : input.t0 + static_cast<double>(i + 1) * input.dt;

        double work = 0.0, heat = 0.0, matter = 0.0;
        StepReport report;
        int halvings = 0;
        try {
            const auto step_fn = [&](double tt, const OpenFlat& s, double hh) -> OpenFlat {
                OpenStepOutcome raw = (input.scheme == Scheme::rk4)
                                          ? open_rk4_raw_step(model, tt, s, hh, opts)
                                          : open_midpoint_raw_step(model, tt, s, hh, opts);
                PontryaginPoint finalized =
                    open_finalize(model, tt + hh, raw.state, opts, nullptr);
                work += raw.work;
                heat += raw.heat;
                matter += raw.matter;
                report.newton_iters += raw.newton_iters;
                report.kkt_condition_estimate =
                    std::max(report.kkt_condition_estimate, raw.max_condition);
                return OpenFlat{finalized.q, finalized.v, finalized.S, raw.state.N};
            };
            flat = detail::advance_with_halving(step_fn, ti, flat, h, opts.halving_max_depth,
                                                halvings);
            state = open_finalize(model, t_next, flat, opts, nullptr);
            flat.v = state.v;

            OpenSampleWithCondition sampled =
                make_open_sample(model, t_next, state, flat.N, opts);
            report.kkt_condition_estimate =
                std::max(report.kkt_condition_estimate, sampled.kkt_condition);
            traj.samples.push_back(std::move(sampled.sample));
            traj.open_samples.push_back(sampled.extra);
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
        traj.heat_increments.push_back(heat);
        traj.matter_increments.push_back(matter);
    }
    return traj;
}

OpenEnergyBalanceReport open_energy_balance_report(const OpenModel& model,
                                                   const Trajectory& traj) {
    (void)model;
    OpenEnergyBalanceReport report;
    const std::size_t intervals = traj.samples.empty() ? 0 : traj.samples.size() - 1;
    report.series.reserve(intervals);
    for (std::size_t i = 0; i < intervals; ++i) {
        const double dE = traj.samples[i + 1].energy - traj.samples[i].energy;
        double inflow = i < traj.work_increments.size() ? traj.work_increments[i] : 0.0;
        if (i < traj.heat_increments.size()) {
            inflow += traj.heat_increments[i];
        }
        if (i < traj.matter_increments.size()) {
            inflow += traj.matter_increments[i];
        }
        report.series.push_back(std::abs(dE - inflow));
        report.max_defect = std::max(report.max_defect, report.series.back());
    }
    return report;
}

}  // namespace dirac_thermo
