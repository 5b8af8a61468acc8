#include "dirac_thermo/check_suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dirac_thermo/dirac_structure.hpp"

namespace dirac_thermo {

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json checks_json = nlohmann::json::array();
    for (const CheckResult& c : checks) {
        nlohmann::json entry{{"name", c.name},
                             {"passed", c.passed},
                             {"worst_value", c.worst_value},
                             {"tolerance", c.tolerance}};
        if (!c.message.empty()) {
            entry["message"] = c.message;
        }
        checks_json.push_back(std::move(entry));
    }
    return nlohmann::json{
        {"model", model}, {"seed", seed}, {"overall", overall}, {"checks", checks_json}};
}

namespace {

constexpr std::uint64_t salt_certification = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t salt_gradients = 0xbf58476d1ce4e5b9ULL;
constexpr std::uint64_t salt_decomposition = 0x94d049bb133111ebULL;
constexpr std::uint64_t salt_simulation = 0x2545f4914f6cdd1dULL;

template <typename Fn>
void run_check(std::vector<CheckResult>& out, const std::string& name, double tolerance,
               Fn&& body) {
    CheckResult r;
    r.name = name;
    r.tolerance = tolerance;
    try {
        r.worst_value = body(r);
        r.passed = r.worst_value <= r.tolerance;
    } catch (const std::exception& e) {
        r.passed = false;
        r.worst_value = std::numeric_limits<double>::infinity();
        r.message = e.what();
    }
    out.push_back(std::move(r));
}

/// Worst isotropy residual of the Dirac structures induced by the
/// variational constraint at sampled states: the distribution
/// blockdiag(C_V, identity) on the doubled space with the canonical form.
double certification_worst(const ThermoModel& model, const StateSampler& sampler,
                           std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed ^ salt_certification);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const SampledState s = sampler(rng);
        const Subspace cv = variational_constraint_space(model, s.q, s.v, s.S);
        const Eigen::Index base = cv.ambient_dim();
        Matrix span = Matrix::Zero(2 * base, cv.dim() + base);
        span.topLeftCorner(base, cv.dim()) = cv.basis();
        span.bottomRightCorner(base, base).setIdentity();
        LinearDiracDescriptor dirac =
            induced_dirac(Subspace(span), PresymplecticForm::canonical(2 * base));
        const DiracCertification cert = certify_dirac(dirac, 1e-10);
        if (!cert.is_dirac) {
            return std::max(cert.max_pairing, 1.0);
        }
        worst = std::max(worst, cert.max_pairing);
    }
    return worst;
}

double closed_gradient_worst(const ThermoModel& model, const StateSampler& sampler,
                             std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed ^ salt_gradients);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const SampledState s = sampler(rng);
        worst = std::max(worst, gradient_check(model, s.q, s.v, s.S).worst());
    }
    return worst;
}

double open_gradient_worst(const OpenModel& model, const StateSampler& sampler,
                           std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed ^ salt_gradients);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const SampledState s = sampler(rng);
        worst = std::max(worst, gradient_check(model.closed_view(s.N), s.q, s.v, s.S).worst());
        const double h = 1e-5 * std::max(std::abs(s.N), 1e-12);
        const double fd = (model.lagrangian(s.q, s.v, s.S, s.N + h) -
                           model.lagrangian(s.q, s.v, s.S, s.N - h)) /
                          (2.0 * h);
        const double analytic = model.dL_dN(s.q, s.v, s.S, s.N);
        worst = std::max(worst, std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
    }
    return worst;
}

void append_trajectory_checks(std::vector<CheckResult>& checks, const ThermoModel& model,
                              const Trajectory& traj) {
    run_check(checks, "reference_run_completed", 0.0, [&](CheckResult& r) {
        if (traj.failed) {
            r.message = traj.failure_message;
            return 1.0;
        }
        return 0.0;
    });
    run_check(checks, "trajectory_dirac_residual", 1e-8, [&](CheckResult&) {
        double worst = 0.0;
        for (const TrajectorySample& s : traj.samples) {
            worst = std::max(worst, s.dirac_residual);
        }
        return worst;
    });
    run_check(checks, "trajectory_cotangent_residual", 1e-8, [&](CheckResult&) {
        double worst = 0.0;
        for (const TrajectorySample& s : traj.samples) {
            const auto [rate, mu] = instantaneous_rate(model, s.t, s.state);
            worst = std::max(worst, cotangent_residual_at_sample(model, s.t, s.state, rate));
        }
        return worst;
    });
    run_check(checks, "energy_balance", 0.0, [&](CheckResult& r) {
        double max_energy = 0.0;
        for (const TrajectorySample& s : traj.samples) {
            max_energy = std::max(max_energy, std::abs(s.energy));
        }
        r.tolerance = 1e-8 * (1.0 + max_energy);
        return energy_balance_report(model, traj).max_defect;
    });
    run_check(checks, "entropy_nondecreasing", 1e-12, [&](CheckResult&) {
        double violation = 0.0;
        for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
            const double increment = traj.samples[i + 1].state.S - traj.samples[i].state.S;
            violation = std::max(violation, -increment);
        }
        return std::max(violation, 0.0);
    });
    if (model.m > 0) {
        run_check(checks, "constraint_residual", 1e-10, [&](CheckResult&) {
            double worst = 0.0;
            for (const TrajectorySample& s : traj.samples) {
                worst = std::max(worst, s.constraint_residuals.lpNorm<Eigen::Infinity>());
            }
            return worst;
        });
    }
}

VerificationReport run_closed_checks(const std::string& name, const ThermoModel& model,
                                     const StateSampler& sampler, std::uint64_t seed) {
    VerificationReport report;
    report.model = name;
    report.seed = seed;

    run_check(report.checks, "dirac_certification", 1e-10, [&](CheckResult&) {
        return certification_worst(model, sampler, seed, 20);
    });
    run_check(report.checks, "gradient_checks", 1e-6, [&](CheckResult&) {
        return closed_gradient_worst(model, sampler, seed, 100);
    });

    Trajectory traj;
    bool have_traj = false;
    std::string sim_error;
    try {
        std::mt19937_64 rng(seed ^ salt_simulation);
        const SampledState s = sampler(rng);
        SimulationInput input;
        input.q0 = s.q;
        input.v0 = s.v;
        input.S0 = s.S;
        input.t0 = 0.0;
        input.t1 = 0.1;
        input.dt = 1e-3;
        input.scheme = Scheme::rk4;
        traj = simulate(model, input);
        have_traj = true;
    } catch (const std::exception& e) {
        sim_error = e.what();
    }
    if (have_traj) {
        append_trajectory_checks(report.checks, model, traj);
    } else {
        run_check(report.checks, "reference_run_completed", 0.0, [&](CheckResult& r) {
            r.message = sim_error;
            return 1.0;
        });
    }

    report.overall = std::all_of(report.checks.begin(), report.checks.end(),
                                 [](const CheckResult& c) { return c.passed; });
    return report;
}

VerificationReport run_open_checks(const std::string& name, const OpenModel& model,
                                   const StateSampler& sampler, std::uint64_t seed) {
    VerificationReport report;
    report.model = name;
    report.seed = seed;

    run_check(report.checks, "dirac_certification", 1e-10, [&](CheckResult&) {
        std::mt19937_64 rng(seed ^ salt_certification);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const SampledState s = sampler(rng);
            const ThermoModel view = model.closed_view(s.N);
            const Subspace cv = variational_constraint_space(view, s.q, s.v, s.S);
            const Eigen::Index base = cv.ambient_dim();
            Matrix span = Matrix::Zero(2 * base, cv.dim() + base);
            span.topLeftCorner(base, cv.dim()) = cv.basis();
            span.bottomRightCorner(base, base).setIdentity();
            LinearDiracDescriptor dirac =
                induced_dirac(Subspace(span), PresymplecticForm::canonical(2 * base));
            const DiracCertification cert = certify_dirac(dirac, 1e-10);
            if (!cert.is_dirac) {
                return std::max(cert.max_pairing, 1.0);
            }
            worst = std::max(worst, cert.max_pairing);
        }
        return worst;
    });
    run_check(report.checks, "gradient_checks", 1e-6, [&](CheckResult&) {
        return open_gradient_worst(model, sampler, seed, 100);
    });
    run_check(report.checks, "entropy_rate_decomposition", 1e-12, [&](CheckResult&) {
        std::mt19937_64 rng(seed ^ salt_decomposition);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const SampledState smp = sampler(rng);
            const OpenState s{0.0, smp.q, smp.v, smp.S, smp.N};
            const OpenRates rates = open_rhs(model, s);
            const double production = internal_entropy_production(model, s);
            double port_flux = 0.0;
            for (const Port& port : model.ports) {
                port_flux += port.entropy_flux(s);
            }
            double source_flux = 0.0;
            for (const HeatSource& source : model.heat_sources) {
                source_flux += source.entropy_flux(s);
            }
            worst = std::max(
                worst, std::abs(rates.Sdot - production - (port_flux + source_flux)));
        }
        return worst;
    });
    run_check(report.checks, "internal_production_nonnegative", 0.0, [&](CheckResult&) {
        std::mt19937_64 rng(seed ^ salt_decomposition);
        double violation = 0.0;
        for (int i = 0; i < 200; ++i) {
            const SampledState smp = sampler(rng);
            const OpenState s{0.0, smp.q, smp.v, smp.S, smp.N};
            violation = std::max(violation, -internal_entropy_production(model, s));
        }
        return std::max(violation, 0.0);
    });

    Trajectory traj;
    bool have_traj = false;
    std::string sim_error;
    try {
        std::mt19937_64 rng(seed ^ salt_simulation);
        const SampledState s = sampler(rng);
        OpenSimulationInput input;
        input.q0 = s.q;
        input.v0 = s.v;
        input.S0 = s.S;
        input.N0 = s.N;
        input.t0 = 0.0;
        input.t1 = 0.1;
        input.dt = 1e-3;
        input.scheme = Scheme::rk4;
        traj = open_simulate(model, input);
        have_traj = true;
    } catch (const std::exception& e) {
        sim_error = e.what();
    }
    run_check(report.checks, "reference_run_completed", 0.0, [&](CheckResult& r) {
        if (!have_traj) {
            r.message = sim_error;
            return 1.0;
        }
        if (traj.failed) {
            r.message = traj.failure_message;
            return 1.0;
        }
        return 0.0;
    });
    if (have_traj) {
        run_check(report.checks, "trajectory_dirac_residual", 1e-8, [&](CheckResult&) {
            double worst = 0.0;
            for (const TrajectorySample& s : traj.samples) {
                worst = std::max(worst, s.dirac_residual);
            }
            return worst;
        });
        run_check(report.checks, "open_energy_balance", 0.0, [&](CheckResult& r) {
            double max_energy = 0.0;
            for (const TrajectorySample& s : traj.samples) {
                max_energy = std::max(max_energy, std::abs(s.energy));
            }
            r.tolerance = 1e-8 * (1.0 + max_energy);
            return open_energy_balance_report(model, traj).max_defect;
        });
        run_check(report.checks, "trajectory_production_nonnegative", 0.0, [&](CheckResult&) {
            double violation = 0.0;
            for (const OpenSample& s : traj.open_samples) {
                violation = std::max(violation, -s.internal_production);
            }
            return std::max(violation, 0.0);
        });
    }

    report.overall = std::all_of(report.checks.begin(), report.checks.end(),
                                 [](const CheckResult& c) { return c.passed; });
    return report;
}

}  // namespace

VerificationReport run_check_suite(const BuiltModel& model, std::uint64_t seed) {
    if (!model.sampler) {
        throw std::invalid_argument("check suite requires a state sampler");
    }
    if (model.closed) {
        return run_closed_checks(model.name, *model.closed, model.sampler, seed);
    }
    if (model.open) {
        return run_open_checks(model.name, *model.open, model.sampler, seed);
    }
    throw std::invalid_argument("check suite requires a built model");
}

VerificationReport run_check_suite(const std::string& name, const nlohmann::json& params,
                                   std::uint64_t seed) {
    return run_check_suite(build_builtin(name, params), seed);
}

}  // namespace dirac_thermo
