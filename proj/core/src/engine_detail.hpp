#pragma once

#include "dirac_thermo/dynamics.hpp"
#include "dirac_thermo/errors.hpp"

namespace dirac_thermo::detail {

/// Post-step state completion shared by the closed and open engines:
/// optional exact velocity projection, kernel velocity restoration, then the
/// dependent slots p = dL/dv, W = Sdot, Lambda = 0.
inline PontryaginPoint finalize_state(const ThermoModel& model, double t, const Vector& q,
                                      Vector v, double S, const SolverOptions& opts) {
    if (opts.projection) {
        v = project_velocity(model, q, v);
    }
    v = restore_kernel_velocities(model, t, q, v, S, opts);
    PontryaginPoint x;
    x.q = q;
    x.S = S;
    x.v = v;
    x.W = entropy_rate(model, q, v, S);
    x.p = model.dL_dv(q, v, S);
    x.Lambda = 0.0;
    return x;
}

struct SampleWithCondition {
    TrajectorySample sample;
    double kkt_condition = 0.0;
};

/// Diagnostics at a stored state, evaluating the instantaneous field there
/// (one extra saddle solve) so residuals measure solver consistency rather
/// than interpolation error. Defined in dynamics.cpp.
SampleWithCondition make_closed_sample(const ThermoModel& model, double t,
                                       const PontryaginPoint& x, const SolverOptions& opts);

/// Structure-membership residual with the entropy-closure group optional,
/// so the open engine can swap in its own balance. Defined in dynamics.cpp.
double dirac_residual_core(const ThermoModel& model, double t, const PontryaginPoint& x,
                           const PontryaginRate& xdot, bool include_entropy_closure);

/// Retries a failing step with two half steps, recursively, up to
/// `max_depth` levels. Substates between halves are never sampled. The step
/// callback must only commit side effects (work accumulation) on success.
template <typename State, typename StepFn>
State advance_with_halving(const StepFn& step_fn, double t, const State& s0, double h,
                           int max_depth, int& halvings) {
    try {
        return step_fn(t, s0, h);
    } catch (const Error&) {
        if (max_depth <= 0) {
            throw;
        }
        ++halvings;
        const State mid = advance_with_halving(step_fn, t, s0, 0.5 * h, max_depth - 1, halvings);
        return advance_with_halving(step_fn, t + 0.5 * h, mid, 0.5 * h, max_depth - 1, halvings);
    }
}

}  // namespace dirac_thermo::detail
