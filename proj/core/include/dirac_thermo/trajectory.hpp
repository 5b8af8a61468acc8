#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dirac_thermo/thermo_model.hpp"

namespace dirac_thermo {

/// Per-step integrator diagnostics.
struct StepReport {
    int newton_iters = 0;
    double kkt_condition_estimate = 0.0;
    bool accepted = false;
    /// Step-halving retries that were needed to complete this interval.
    int halvings = 0;
};

/// One stored time point with its diagnostics.
struct TrajectorySample {
    double t = 0.0;
    PontryaginPoint state;
    Vector mu;                   ///< constraint multipliers, size m
    double energy = 0.0;         ///< E = <p,v> - L
    double entropy_rate = 0.0;   ///< Sdot at the stored state
    Vector constraint_residuals; ///< <omega^r(q), v>, size m
    double dirac_residual = 0.0;
    double power_ext = 0.0;      ///< <F^ext, v>
};

/// Extra per-sample quantities for open-system runs.
struct OpenSample {
    double N = 0.0;
    double internal_production = 0.0;  ///< I
    double P_W = 0.0;
    double P_H = 0.0;
    double P_M = 0.0;
    double p_time = 0.0;  ///< covariant time momentum, L - <p,v>
};

/// Solution curve with write-once samples. Samples sit on the requested time
/// grid; step-halving retries never add intermediate samples. When `failed`
/// is set the trajectory holds the prefix integrated before the failure.
struct Trajectory {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    bool open = false;

    std::vector<TrajectorySample> samples;
    std::vector<OpenSample> open_samples;  ///< parallel to samples when open

    std::vector<StepReport> step_reports;  ///< one per completed interval
    /// Work integral of <F^ext, qdot> per interval, accumulated with the
    /// integrator's own quadrature.
    std::vector<double> work_increments;
    /// Open runs: per-interval integrals of P_H and P_M with the same
    /// quadrature.
    std::vector<double> heat_increments;
    std::vector<double> matter_increments;

    bool failed = false;
    std::string failure_message;

    /// CSV export: header
    /// t,q_1..q_n,v_1..v_n,S,p_1..p_n,mu_1..mu_m,E,Sdot,dirac_residual,power_ext
    /// with `,N,I,P_W,P_H,P_M,p_time` appended for open runs; values printed
    /// with 17 significant digits.
    void write_csv(std::ostream& out) const;
};

}  // namespace dirac_thermo
