#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>

namespace dirac_thermo::detail {

/// One classical Runge-Kutta step on a flat state vector. Exposes the stage
/// states and times so callers can run quadratures (work integrals) with the
/// scheme's own weights. The closed and open engines both step through this
/// kernel so that the open system in its closed limit performs identical
/// arithmetic on the shared state components.
struct FlatRK4Step {
    std::array<double, 4> stage_t{};
    std::array<Eigen::VectorXd, 4> stage_y;
    Eigen::VectorXd next;
};

inline FlatRK4Step rk4_flat(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                            double t, const Eigen::VectorXd& y, double h) {
    FlatRK4Step s;
    s.stage_t = {t, t + 0.5 * h, t + 0.5 * h, t + h};
    std::array<Eigen::VectorXd, 4> k;
    s.stage_y[0] = y;
    k[0] = f(s.stage_t[0], s.stage_y[0]);
    s.stage_y[1] = y + (0.5 * h) * k[0];
    k[1] = f(s.stage_t[1], s.stage_y[1]);
    s.stage_y[2] = y + (0.5 * h) * k[1];
    k[2] = f(s.stage_t[2], s.stage_y[2]);
    s.stage_y[3] = y + h * k[2];
    k[3] = f(s.stage_t[3], s.stage_y[3]);
    s.next = y + (h / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
    return s;
}

/// Quadrature of a stage-sampled integrand with the classical Runge-Kutta
/// weights: (h/6) (g_1 + 2 g_2 + 2 g_3 + g_4).
inline double rk4_quadrature(double h, const std::array<double, 4>& g) {
    return (h / 6.0) * (g[0] + 2.0 * g[1] + 2.0 * g[2] + g[3]);
}

}  // namespace dirac_thermo::detail
