/// Acceptance gate: every release-level property of the library, one line of
/// output per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dirac_thermo/builtin_models.hpp"
#include "dirac_thermo/dirac_structure.hpp"
#include "dirac_thermo/dynamics.hpp"
#include "dirac_thermo/ideal_gas.hpp"
#include "dirac_thermo/open_system.hpp"
#include "dirac_thermo/subspace.hpp"

using namespace dirac_thermo;
using nlohmann::json;

namespace {

struct CriterionResult {
    int id = 0;
    std::string label;
    bool passed = false;
    double worst = 0.0;
    double tolerance = 0.0;
    double seconds = 0.0;
    std::string note;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Subspace random_subspace(std::mt19937_64& rng, Eigen::Index dim, Eigen::Index rank) {
    std::normal_distribution<double> g;
    if (rank == 0) return Subspace::zero(dim);
    Matrix a(dim, rank);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < rank; ++j) a(i, j) = g(rng);
    return Subspace(a);
}

PresymplecticForm random_form(std::mt19937_64& rng, Eigen::Index dim) {
    std::normal_distribution<double> g;
    Matrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = g(rng);
    return PresymplecticForm(0.5 * (a - a.transpose()));
}

/// Piston-cylinder reference initial state: crank spinning at 0.8 rad/s with
/// the piston velocity on the transmission constraint.
SimulationInput piston_input(const PistonParams& params, bool projection = true) {
    SimulationInput in;
    in.q0 = vec({0.5, 0.3});
    const double vphi = 0.8;
    in.v0 = vec({-piston_alpha(0.3, params.a, params.b) * vphi, vphi});
    in.S0 = 0.0;
    in.t1 = 1.0;
    in.dt = 1e-3;
    in.options.projection = projection;
    return in;
}

/// LCR reference initial state: charged capacitor, resistor current on the
/// algebraic manifold f_R = q_C / (R C).
SimulationInput lcr_input(const LCRParams& params, double q_C0, double f_L0) {
    SimulationInput in;
    const double f_R0 = q_C0 / (params.R * params.C);
    in.q0 = vec({0.0, q_C0, 0.0, 0.0});
    in.v0 = vec({f_L0, f_L0 - f_R0, f_L0, f_R0});
    in.S0 = 0.0;
    in.t1 = 1.0;
    in.dt = 1e-3;
    return in;
}

/// Independent integration of the LCR network equations on the reduced
/// coordinates y = (q_L, q_C, q_V, q_R, f_L, S):
///   L_ind df_L/dt = V(t) - q_C/C,      dq_C/dt = f_L - q_C/(R C),
///   dq_L/dt = dq_V/dt = f_L,           dq_R/dt = q_C/(R C),
///   dS/dt = R f_R^2 / T(S),            T(S) = T0 exp((S - S0)/c_R),
/// with plain textbook RK4. Shares no code with the engine.
struct LCROracle {
    LCRParams params;

    Vector deriv(double t, const Vector& y) const {
        const double q_C = y(1);
        const double f_L = y(4);
        const double S = y(5);
        const double f_R = q_C / (params.R * params.C);
        const double T = params.T0 * std::exp((S - params.S0) / params.heat_capacity);
        Vector d(6);
        d(0) = f_L;
        d(1) = f_L - f_R;
        d(2) = f_L;
        d(3) = f_R;
        d(4) = (params.voltage(t) - q_C / params.C) / params.L;
        d(5) = params.R * f_R * f_R / T;
        return d;
    }

    Vector rk4_step(double t, const Vector& y, double h) const {
        const Vector k1 = deriv(t, y);
        const Vector k2 = deriv(t + h / 2.0, y + (h / 2.0) * k1);
        const Vector k3 = deriv(t + h / 2.0, y + (h / 2.0) * k2);
        const Vector k4 = deriv(t + h, y + h * k3);
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    Vector initial(const SimulationInput& in) const {
        Vector y(6);
        y.head(4) = in.q0;
        y(4) = in.v0(0);
        y(5) = in.S0;
        return y;
    }

    /// Velocity coordinates implied by the oracle state.
    Vector velocities(const Vector& y) const {
        const double f_R = y(1) / (params.R * params.C);
        return vec({y(4), y(4) - f_R, y(4), f_R});
    }
};

/// Sup-norm distance between an engine trajectory and the oracle advanced on
/// the same time grid with `substeps` oracle steps per engine interval.
double lcr_oracle_distance(const LCROracle& oracle, const Trajectory& traj,
                           const SimulationInput& in, int substeps) {
    Vector y = oracle.initial(in);
    double worst = 0.0;
    auto measure = [&](const TrajectorySample& s) {
        worst = std::max(worst, (s.state.q - y.head(4)).lpNorm<Eigen::Infinity>());
        worst = std::max(worst,
                         (s.state.v - oracle.velocities(y)).lpNorm<Eigen::Infinity>());
        worst = std::max(worst, std::abs(s.state.S - y(5)));
    };
    measure(traj.samples.front());
    for (std::size_t k = 1; k < traj.samples.size(); ++k) {
        const double t_prev = traj.samples[k - 1].t;
        const double h = (traj.samples[k].t - t_prev) / substeps;
        for (int i = 0; i < substeps; ++i) {
            y = oracle.rk4_step(t_prev + i * h, y, h);
        }
        measure(traj.samples[k]);
    }
    return worst;
}

double max_dirac_residual(const Trajectory& traj) {
    double worst = 0.0;
    for (const TrajectorySample& s : traj.samples) worst = std::max(worst, s.dirac_residual);
    return worst;
}

double max_cotangent_residual(const ThermoModel& model, const Trajectory& traj) {
    double worst = 0.0;
    for (const TrajectorySample& s : traj.samples) {
        auto [rate, mu] = instantaneous_rate(model, s.t, s.state);
        (void)mu;
        worst = std::max(worst, cotangent_residual_at_sample(model, s.t, s.state, rate));
    }
    return worst;
}

double min_entropy_increment(const Trajectory& traj) {
    double min_inc = 0.0;
    for (std::size_t k = 1; k < traj.samples.size(); ++k) {
        min_inc = std::min(min_inc, traj.samples[k].state.S - traj.samples[k - 1].state.S);
    }
    return min_inc;
}

double max_constraint_violation(const Trajectory& traj) {
    double worst = 0.0;
    for (const TrajectorySample& s : traj.samples) {
        if (s.constraint_residuals.size() > 0) {
            worst = std::max(worst, s.constraint_residuals.lpNorm<Eigen::Infinity>());
        }
    }
    return worst;
}

OpenSimulationInput open_piston_input() {
    OpenSimulationInput in;
    in.q0 = vec({0.5});
    in.v0 = vec({0.0});
    in.S0 = 0.0;
    in.N0 = 0.002;
    in.t1 = 1.0;
    in.dt = 1e-3;
    return in;
}

using CriterionBody = std::function<void(CriterionResult&)>;

CriterionResult run_criterion(int id, const std::string& label, double tolerance,
                              const CriterionBody& body) {
    CriterionResult r;
    r.id = id;
    r.label = label;
    r.tolerance = tolerance;
    const double t0 = now_seconds();
    try {
        body(r);
        r.passed = r.worst <= r.tolerance;
    } catch (const std::exception& e) {
        r.passed = false;
        r.worst = std::numeric_limits<double>::infinity();
        r.note = e.what();
    }
    r.seconds = now_seconds() - t0;
    return r;
}

}  // namespace

int main() {
    std::vector<CriterionResult> results;

    results.push_back(run_criterion(
        1, "random induced structures certify as Dirac", 1e-10, [](CriterionResult& r) {
            std::mt19937_64 rng(0xD1ACULL);
            for (Eigen::Index dim : {2, 4, 6, 10}) {
                for (int trial = 0; trial < 100; ++trial) {
                    const Eigen::Index rank =
                        static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(dim + 1));
                    const Subspace delta = random_subspace(rng, dim, rank);
                    const PresymplecticForm omega = random_form(rng, dim);
                    LinearDiracDescriptor dirac = induced_dirac(delta, omega);
                    const DiracCertification cert = certify_dirac(dirac, 1e-10);
                    double violation = cert.max_pairing;
                    if (!cert.dim_ok) violation = std::max(violation, 1.0);
                    if (!orthogonal_complement(dirac).same_span(dirac.elements)) {
                        violation = std::max(violation, 1.0);
                    }
                    r.worst = std::max(r.worst, violation);
                }
            }
        }));
    {
        CriterionResult& r = results.back();
        if (r.passed && r.seconds >= 5.0) {
            r.passed = false;
            r.note = "runtime budget of 5 s exceeded";
        }
    }

    // Criteria 2-6 share the two closed reference runs.
    const ThermoModel piston = build_piston_cylinder();
    const ThermoModel lcr = build_lcr();

    const double t_closed_start = now_seconds();
    const Trajectory piston_traj = simulate(piston, piston_input(PistonParams{}));
    const double piston_seconds = now_seconds() - t_closed_start;
    const Trajectory lcr_traj = simulate(lcr, lcr_input(LCRParams{}, 0.05, 0.0));
    const double lcr_seconds = now_seconds() - t_closed_start - piston_seconds;

    results.push_back(run_criterion(
        2, "closed runs without external forcing conserve energy", 1e-8,
        [&](CriterionResult& r) {
            if (piston_traj.failed || lcr_traj.failed) {
                r.note = "reference run failed";
                r.worst = std::numeric_limits<double>::infinity();
                return;
            }
            for (const Trajectory* traj : {&piston_traj, &lcr_traj}) {
                const double e0 = traj->samples.front().energy;
                for (const TrajectorySample& s : traj->samples) {
                    r.worst = std::max(r.worst, std::abs(s.energy - e0) / std::abs(e0));
                }
            }
            if (piston_seconds >= 5.0 || lcr_seconds >= 5.0) {
                r.worst = std::max(r.worst, 1.0);
                r.note = "runtime budget of 5 s exceeded";
            }
        }));

    results.push_back(run_criterion(
        3, "dissipative runs never decrease entropy", 1e-12, [&](CriterionResult& r) {
            r.worst = std::max(-min_entropy_increment(piston_traj),
                               -min_entropy_increment(lcr_traj));
        }));

    results.push_back(run_criterion(
        4, "trajectories stay on the Dirac structure in both formulations", 1e-8,
        [&](CriterionResult& r) {
            r.worst = std::max({max_dirac_residual(piston_traj),
                                max_dirac_residual(lcr_traj),
                                max_cotangent_residual(piston, piston_traj),
                                max_cotangent_residual(lcr, lcr_traj)});
        }));

    results.push_back(run_criterion(
        5, "engine agrees with the independent circuit oracle", 1e-8,
        [&](CriterionResult& r) {
            LCRParams params;
            params.voltage.constant = 0.5;
            LCROracle oracle{params};
            const SimulationInput in = lcr_input(params, 0.05, 0.2);
            const ThermoModel driven = build_lcr(params);
            const Trajectory traj = simulate(driven, in);
            if (traj.failed) {
                r.note = "driven run failed";
                r.worst = std::numeric_limits<double>::infinity();
                return;
            }
            r.worst = lcr_oracle_distance(oracle, traj, in, 1);
        }));
    {
        CriterionResult& r = results.back();
        if (r.passed && r.seconds >= 5.0) {
            r.passed = false;
            r.note = "runtime budget of 5 s exceeded";
        }
    }

    results.push_back(run_criterion(
        6, "transmission constraint holds with projection (and drifts boundedly without)",
        1e-10, [&](CriterionResult& r) {
            r.worst = max_constraint_violation(piston_traj);
            const Trajectory drifting =
                simulate(piston, piston_input(PistonParams{}, false));
            const double drift = max_constraint_violation(drifting);
            char note[96];
            std::snprintf(note, sizeof(note), "unprojected drift %.3e (budget 1e-6)", drift);
            r.note = note;
            if (drift > 1e-6) r.worst = std::max(r.worst, drift);
        }));

    results.push_back(run_criterion(
        7, "open entropy rate decomposes with nonnegative production", 1e-12,
        [](CriterionResult& r) {
            const BuiltModel built = build_builtin("open_piston", json::object());
            const OpenModel& model = *built.open;
            std::mt19937_64 rng(0x0FE2ULL);
            for (int i = 0; i < 1000; ++i) {
                const SampledState draw = built.sampler(rng);
                OpenState s;
                s.t = 0.0;
                s.q = draw.q;
                s.v = draw.v;
                s.S = draw.S;
                s.N = draw.N;
                const OpenRates rates = open_rhs(model, s);
                const double production = internal_entropy_production(model, s);
                double flux = 0.0;
                for (const Port& port : model.ports) flux += port.entropy_flux(s);
                for (const HeatSource& src : model.heat_sources) flux += src.entropy_flux(s);
                r.worst = std::max(r.worst, std::abs(rates.Sdot - production - flux));
                if (production < 0.0) r.worst = std::max(r.worst, -production);
            }
        }));

    results.push_back(run_criterion(
        8, "open runs balance energy against the three port powers", 0.0,
        [](CriterionResult& r) {
            const OpenModel model = build_open_piston();
            const Trajectory traj = open_simulate(model, open_piston_input());
            if (traj.failed) {
                r.note = "open run failed";
                r.worst = std::numeric_limits<double>::infinity();
                r.tolerance = 0.0;
                return;
            }
            double e_scale = 0.0;
            for (const TrajectorySample& s : traj.samples) {
                e_scale = std::max(e_scale, std::abs(s.energy));
            }
            r.tolerance = 1e-8 * (1.0 + e_scale);
            const double e0 = traj.samples.front().energy;
            double supplied = 0.0;
            for (std::size_t k = 1; k < traj.samples.size(); ++k) {
                supplied += traj.work_increments[k - 1] + traj.heat_increments[k - 1] +
                            traj.matter_increments[k - 1];
                r.worst = std::max(r.worst,
                                   std::abs(traj.samples[k].energy - e0 - supplied));
            }
        }));

    results.push_back(run_criterion(
        9, "zero-conductance open piston reproduces the closed trajectory exactly", 0.0,
        [](CriterionResult& r) {
            OpenPistonParams stripped_params;
            stripped_params.ports.clear();
            stripped_params.heat_sources.clear();
            const OpenModel stripped = build_open_piston(stripped_params);

            OpenPistonParams zero_params;
            zero_params.ports = {PortParams{}};
            zero_params.ports[0].lambda = 0.0;
            zero_params.ports[0].sigma = 0.0;
            zero_params.heat_sources = {HeatSourceParams{}};
            zero_params.heat_sources[0].kappa = 0.0;
            const OpenModel zeroed = build_open_piston(zero_params);

            OpenSimulationInput oin = open_piston_input();
            oin.v0 = vec({0.1});
            const Trajectory a = open_simulate(stripped, oin);
            const Trajectory b = open_simulate(zeroed, oin);

            SimulationInput cin;
            cin.q0 = oin.q0;
            cin.v0 = oin.v0;
            cin.S0 = oin.S0;
            cin.t1 = oin.t1;
            cin.dt = oin.dt;
            const Trajectory c = simulate(stripped.closed_view(oin.N0), cin);

            if (a.failed || b.failed || c.failed ||
                a.samples.size() != c.samples.size() ||
                b.samples.size() != c.samples.size()) {
                r.note = "reference runs failed or diverged in length";
                r.worst = std::numeric_limits<double>::infinity();
                return;
            }
            for (std::size_t k = 0; k < c.samples.size(); ++k) {
                for (const Trajectory* open_traj : {&a, &b}) {
                    const TrajectorySample& s = open_traj->samples[k];
                    const TrajectorySample& ref = c.samples[k];
                    r.worst = std::max(r.worst, std::abs(s.state.q(0) - ref.state.q(0)));
                    r.worst = std::max(r.worst, std::abs(s.state.v(0) - ref.state.v(0)));
                    r.worst = std::max(r.worst, std::abs(s.state.S - ref.state.S));
                    r.worst = std::max(
                        r.worst, std::abs(open_traj->open_samples[k].N - oin.N0));
                }
            }
        }));

    results.push_back(run_criterion(
        10, "analytic derivatives match finite differences everywhere", 1e-6,
        [](CriterionResult& r) {
            std::mt19937_64 rng(0x9DADULL);
            for (const std::string& name : builtin_names()) {
                const BuiltModel built = build_builtin(name, json::object());
                for (int i = 0; i < 100; ++i) {
                    const SampledState s = built.sampler(rng);
                    if (built.closed) {
                        r.worst = std::max(
                            r.worst, gradient_check(*built.closed, s.q, s.v, s.S).worst());
                    } else {
                        const ThermoModel view = built.open->closed_view(s.N);
                        r.worst = std::max(r.worst,
                                           gradient_check(view, s.q, s.v, s.S).worst());
                        const double h = 1e-5 * s.N;
                        const double fd = (built.open->lagrangian(s.q, s.v, s.S, s.N + h) -
                                           built.open->lagrangian(s.q, s.v, s.S, s.N - h)) /
                                          (2.0 * h);
                        const double analytic = built.open->dL_dN(s.q, s.v, s.S, s.N);
                        r.worst = std::max(r.worst, std::abs(analytic - fd) /
                                                        std::max(1.0, std::abs(fd)));
                    }
                }
            }
        }));

    results.push_back(run_criterion(
        11, "halving the step shrinks the oracle error at fourth order", 0.0,
        [](CriterionResult& r) {
            // A fast-relaxing configuration keeps the discretization error
            // far above roundoff so the ratios are measurable.
            LCRParams params;
            params.L = 0.2;
            params.C = 2e-3;
            params.R = 2.0;
            params.voltage.constant = 1.0;
            const ThermoModel model = build_lcr(params);
            LCROracle oracle{params};

            auto error_at = [&](double dt) {
                SimulationInput in = lcr_input(params, 0.02, 0.0);
                in.t1 = 0.5;
                in.dt = dt;
                const Trajectory traj = simulate(model, in);
                if (traj.failed) throw std::runtime_error("convergence run failed");
                return lcr_oracle_distance(oracle, traj, in, 200);
            };
            const double e1 = error_at(2e-3);
            const double e2 = error_at(1e-3);
            const double e3 = error_at(5e-4);
            const double ratio1 = e1 / e2;
            const double ratio2 = e2 / e3;
            char note[128];
            std::snprintf(note, sizeof(note),
                          "errors %.3e / %.3e / %.3e, ratios %.2f and %.2f (need >= 12)",
                          e1, e2, e3, ratio1, ratio2);
            r.note = note;
            r.worst = (ratio1 >= 12.0 && ratio2 >= 12.0) ? 0.0 : 1.0;
        }));

    bool all_passed = true;
    for (const CriterionResult& r : results) {
        all_passed = all_passed && r.passed;
        std::printf("%s  criterion %2d: %s (worst %.3e, tol %.3e, %.2fs)%s%s\n",
                    r.passed ? "PASS" : "FAIL", r.id, r.label.c_str(), r.worst, r.tolerance,
                    r.seconds, r.note.empty() ? "" : " -- ", r.note.c_str());
    }
    std::printf("%s: %zu/%zu acceptance criteria satisfied\n",
                all_passed ? "SUCCESS" : "FAILURE",
                static_cast<std::size_t>(
                    std::count_if(results.begin(), results.end(),
                                  [](const CriterionResult& r) { return r.passed; })),
                results.size());
    return all_passed ? 0 : 1;
}
