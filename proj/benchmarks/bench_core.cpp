/// Microbenchmarks for the hot paths: Dirac certification, the constrained
/// saddle solve, single integrator steps, and the open-system rate evaluation.

#include <benchmark/benchmark.h>

#include <random>

#include "dirac_thermo/builtin_models.hpp"
#include "dirac_thermo/dirac_structure.hpp"
#include "dirac_thermo/dynamics.hpp"
#include "dirac_thermo/kkt.hpp"
#include "dirac_thermo/open_system.hpp"

namespace dt = dirac_thermo;

namespace {

dt::Subspace random_subspace(std::mt19937_64& rng, int dim, int rank) {
    std::normal_distribution<double> gauss;
    dt::Matrix span(dim, rank);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < rank; ++j) span(i, j) = gauss(rng);
    return dt::Subspace(span);
}

dt::PresymplecticForm random_form(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> gauss;
    dt::Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = gauss(rng);
    return dt::PresymplecticForm((a - a.transpose()) / 2.0);
}

void bench_induced_dirac(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const int n = 10;
    const dt::Subspace delta = random_subspace(rng, n, 4);
    const dt::PresymplecticForm omega = random_form(rng, n);
    for (auto _ : state) {
        dt::LinearDiracDescriptor d = dt::induced_dirac(delta, omega);
        benchmark::DoNotOptimize(d.elements);
    }
}
BENCHMARK(bench_induced_dirac);

void bench_certify_dirac(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const int n = 10;
    const dt::LinearDiracDescriptor d =
        dt::induced_dirac(random_subspace(rng, n, 4), random_form(rng, n));
    for (auto _ : state) {
        dt::DiracCertification cert = dt::certify_dirac(d);
        benchmark::DoNotOptimize(cert.max_pairing);
    }
}
BENCHMARK(bench_certify_dirac);

void bench_kkt_solve_piston(benchmark::State& state) {
    const dt::ThermoModel model = dt::build_piston_cylinder();
    dt::Vector q(2), v(2);
    q << 0.5, 0.3;
    v << -dt::piston_alpha(0.3, 0.25, 0.6) * 0.8, 0.8;
    const double S = 0.0;
    const dt::SolverOptions opts;
    for (auto _ : state) {
        dt::KKTSolution sol = dt::solve_kkt(model, 0.0, q, v, S, opts);
        benchmark::DoNotOptimize(sol.vdot);
    }
}
BENCHMARK(bench_kkt_solve_piston);

void bench_kkt_solve_lcr(benchmark::State& state) {
    const dt::ThermoModel model = dt::build_lcr();
    dt::Vector q(4), v(4);
    q << 0.0, 0.05, 0.0, 0.0;
    v << 0.0, -0.1, 0.0, 0.1;
    const double S = 0.0;
    const dt::SolverOptions opts;
    for (auto _ : state) {
        dt::KKTSolution sol = dt::solve_kkt(model, 0.0, q, v, S, opts);
        benchmark::DoNotOptimize(sol.vdot);
    }
}
BENCHMARK(bench_kkt_solve_lcr);

void bench_step_rk4_piston(benchmark::State& state) {
    const dt::ThermoModel model = dt::build_piston_cylinder();
    dt::PontryaginPoint x;
    x.q = dt::Vector(2);
    x.q << 0.5, 0.3;
    x.v = dt::Vector(2);
    x.v << -dt::piston_alpha(0.3, 0.25, 0.6) * 0.8, 0.8;
    x.S = 0.0;
    x.p = model.dL_dv(x.q, x.v, x.S);
    x.W = 0.0;
    x.Lambda = 0.0;
    const dt::SolverOptions opts;
    for (auto _ : state) {
        dt::StepResult r = dt::step(model, 0.0, x, 1e-3, dt::Scheme::rk4, opts);
        benchmark::DoNotOptimize(r.state.q);
    }
}
BENCHMARK(bench_step_rk4_piston);

void bench_open_rhs(benchmark::State& state) {
    const dt::OpenModel model = dt::build_open_piston();
    dt::OpenState s;
    s.t = 0.0;
    s.q = dt::Vector(1);
    s.q << 0.5;
    s.v = dt::Vector(1);
    s.v << 0.1;
    s.S = 0.0;
    s.N = 0.002;
    const dt::SolverOptions opts;
    for (auto _ : state) {
        dt::OpenRates rates = dt::open_rhs(model, s, opts);
        benchmark::DoNotOptimize(rates.Sdot);
    }
}
BENCHMARK(bench_open_rhs);

}  // namespace

BENCHMARK_MAIN();
