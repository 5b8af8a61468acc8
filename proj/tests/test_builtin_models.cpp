#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "dirac_thermo/builtin_models.hpp"
#include "dirac_thermo/dynamics.hpp"
#include "dirac_thermo/errors.hpp"
#include "dirac_thermo/ideal_gas.hpp"

using namespace dirac_thermo;
using nlohmann::json;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST_CASE("time signal evaluation") {
    TimeSignal constant;
    constant.constant = 2.5;
    CHECK(constant(17.0) == 2.5);
    CHECK(constant.is_constant());

    TimeSignal wave;
    wave.constant = 0.1;
    wave.amplitude = 0.02;
    wave.frequency = 3.0;
    CHECK(wave(0.5) == doctest::Approx(0.1 + 0.02 * std::sin(1.5)).epsilon(1e-15));
    CHECK_FALSE(wave.is_constant());
}

TEST_CASE("crank-slider transmission ratio frozen values") {
    CHECK(piston_alpha(0.0, 0.25, 0.6) == 0.0);
    // At phi = pi/2 the rod term vanishes: alpha = a.
    CHECK(piston_alpha(std::acos(-1.0) / 2.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(piston_alpha(std::acos(-1.0), 0.25, 0.6)) <= 1e-12);
}

TEST_CASE("transmission ratio derivative matches finite differences") {
    const double a = 0.25, b = 0.6, h = 1e-6;
    for (double phi : {-1.2, -0.4, 0.0, 0.3, 0.9, 1.5, 2.8}) {
        const double fd = (piston_alpha(phi + h, a, b) - piston_alpha(phi - h, a, b)) / (2.0 * h);
        CHECK(piston_alpha_prime(phi, a, b) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("ideal gas thermodynamic identities") {
    const IdealGas gas{IdealGasParams{}};
    const double R = gas_constant;

    SUBCASE("reference calibration") {
        const IdealGasParams& p = gas.params();
        CHECK(gas.temperature(p.S0, p.V0, p.N0) == doctest::Approx(p.T0).epsilon(1e-12));
        CHECK(gas.energy(p.S0, p.V0, p.N0) ==
              doctest::Approx(1.5 * p.N0 * R * p.T0).epsilon(1e-12));
    }

    SUBCASE("state equations and Euler relation at random states") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.5, 2.0);
        for (int i = 0; i < 50; ++i) {
            const double S = 0.01 * (u(rng) - 1.25);
            const double V = 5e-3 * u(rng);
            const double N = 0.002 * u(rng);
            const double U = gas.energy(S, V, N);
            const double T = gas.temperature(S, V, N);
            const double p = gas.pressure(S, V, N);
            const double mu = gas.chemical_potential(S, V, N);
            CHECK(T == doctest::Approx(2.0 * U / (3.0 * N * R)).epsilon(1e-12));
            CHECK(p == doctest::Approx(2.0 * U / (3.0 * V)).epsilon(1e-12));
            CHECK(mu == doctest::Approx(2.5 * R * T - T * S / N).epsilon(1e-10));
            // Euler: U = T S - p V + mu N for the monatomic gas.
            CHECK(U == doctest::Approx(T * S - p * V + mu * N).epsilon(1e-11));
        }
    }

    SUBCASE("partial derivatives match finite differences") {
        const double S = 0.003, V = 4e-3, N = 0.0021;
        const double hS = 1e-7, hV = 1e-9 * 40, hN = 1e-9;
        const double fdS = (gas.energy(S + hS, V, N) - gas.energy(S - hS, V, N)) / (2 * hS);
        const double fdV = (gas.energy(S, V + hV, N) - gas.energy(S, V - hV, N)) / (2 * hV);
        const double fdN = (gas.energy(S, V, N + hN) - gas.energy(S, V, N - hN)) / (2 * hN);
        CHECK(gas.dU_dS(S, V, N) == doctest::Approx(fdS).epsilon(1e-6));
        CHECK(gas.dU_dV(S, V, N) == doctest::Approx(fdV).epsilon(1e-6));
        CHECK(gas.dU_dN(S, V, N) == doctest::Approx(fdN).epsilon(1e-6));
        CHECK(gas.dU_dS(S, V, N) == doctest::Approx(gas.temperature(S, V, N)).epsilon(1e-12));
        CHECK(gas.dU_dV(S, V, N) == doctest::Approx(-gas.pressure(S, V, N)).epsilon(1e-12));
        CHECK(gas.dU_dN(S, V, N) ==
              doctest::Approx(gas.chemical_potential(S, V, N)).epsilon(1e-10));
    }

    SUBCASE("domain guards") {
        CHECK_THROWS_AS(gas.energy(0.0, 0.0, 0.002), ModelDomainError);
        CHECK_THROWS_AS(gas.energy(0.0, 5e-3, -1e-9), ModelDomainError);
    }

    SUBCASE("equilibrium helpers invert the potentials") {
        const double S = 0.004, V = 5e-3, N = 0.002;
        const double T = gas.temperature(S, V, N);
        const double mu = gas.chemical_potential(S, V, N);
        const double s_molar = gas.equilibrium_molar_entropy(T, mu);
        CHECK(s_molar == doctest::Approx(S / N).epsilon(1e-10));
        const double n_density = gas.equilibrium_molar_density(T, s_molar);
        CHECK(n_density == doctest::Approx(N / V).epsilon(1e-10));
    }
}

TEST_CASE("LCR model frozen momentum and admissibility") {
    LCRParams params;
    params.L = 0.5;
    const ThermoModel model = build_lcr(params);

    // v = (2, 0, 0, 0): momentum is the inductor flux linkage (L_ind * 2, 0, 0, 0).
    const Vector p = model.dL_dv(vec({0.0, 0.0, 0.0, 0.0}), vec({2.0, 0.0, 0.0, 0.0}), 0.0);
    CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.tail(3).lpNorm<Eigen::Infinity>() == 0.0);

    // Kirchhoff current rows: (1, 1, 1, 0) is admissible, (1, 0, 0, 0) is not.
    const Matrix omega = model.constraints_checked(vec({0.0, 0.0, 0.0, 0.0}));
    CHECK((omega * vec({1.0, 1.0, 1.0, 0.0})).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((omega * vec({1.0, 0.0, 0.0, 0.0})).lpNorm<Eigen::Infinity>() > 0.5);
}

TEST_CASE("piston static torque balance holds the mechanism at rest") {
    const PistonParams params;
    const ThermoModel model = build_piston_cylinder(params);
    const IdealGas gas{params.gas};

    const double q0 = 0.5, phi0 = 0.3, S0 = 0.0;
    const double pressure = gas.pressure(S0, params.A * q0, params.gas.N0);
    const double alpha = piston_alpha(phi0, params.a, params.b);

    // Static balance: the torque carries the crank weight plus the gas load
    // transmitted through the linkage; the multiplier carries the gas load.
    ThermoModel held = model;
    const double torque =
        params.m * params.g * params.a * std::cos(phi0) + alpha * pressure * params.A;
    held.external_force = [torque](double, const Vector&, const Vector&, double) {
        return vec({0.0, torque});
    };

    PontryaginPoint x;
    x.q = vec({q0, phi0});
    x.v = vec({0.0, 0.0});
    x.S = S0;
    x.p = held.dL_dv(x.q, x.v, x.S);
    x.W = 0.0;
    x.Lambda = 0.0;
    auto [rate, mu] = instantaneous_rate(held, 0.0, x);
    CHECK(rate.vdot.lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK(mu(0) == doctest::Approx(-pressure * params.A).epsilon(1e-10));
}

TEST_CASE("samplers draw admissible states") {
    std::mt19937_64 rng(97);
    for (const std::string& name : builtin_names()) {
        const BuiltModel built = build_builtin(name, json::object());
        for (int i = 0; i < 100; ++i) {
            const SampledState s = built.sampler(rng);
            if (built.closed) {
                const Matrix omega = built.closed->constraints_checked(s.q);
                if (omega.rows() > 0) {
                    CHECK((omega * s.v).lpNorm<Eigen::Infinity>() <= 1e-14);
                }
            } else {
                CHECK(s.N > 0.0);
            }
        }
    }
}

TEST_CASE("builtin catalog and JSON parameter round trips") {
    const std::vector<std::string> names = builtin_names();
    REQUIRE(names.size() == 3);
    CHECK(names[0] == "piston_cylinder");
    CHECK(names[1] == "lcr");
    CHECK(names[2] == "open_piston");

    for (const std::string& name : names) {
        const json defaults = builtin_default_params(name);
        CHECK_NOTHROW(build_builtin(name, defaults));
    }
    CHECK_THROWS_AS(builtin_default_params("no_such_model"), ConfigError);
    CHECK_THROWS_AS(build_builtin("no_such_model", json::object()), ConfigError);
}

TEST_CASE("parameter validation names the offending key") {
    SUBCASE("rod shorter than the crank") {
        try {
            build_builtin("piston_cylinder", json{{"b", 0.1}});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "b");
            CHECK(std::string(e.what()).find("b > a") != std::string::npos);
        }
    }
    SUBCASE("unknown parameter") {
        try {
            build_builtin("lcr", json{{"inductance", 1.0}});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "inductance");
        }
    }
    SUBCASE("nonpositive gas volume") {
        CHECK_THROWS_AS(build_builtin("piston_cylinder", json{{"gas", {{"V0", 0.0}}}}),
                        ConfigError);
    }
    SUBCASE("negative port conductance") {
        CHECK_THROWS_AS(
            build_builtin("open_piston",
                          json{{"ports", json::array({{{"lambda", -1.0}}})}}),
            ConfigError);
    }
}
