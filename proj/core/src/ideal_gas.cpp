#include "dirac_thermo/ideal_gas.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dirac_thermo/errors.hpp"

namespace dirac_thermo {

IdealGas::IdealGas(const IdealGasParams& params) : params_(params) {
    if (!(params.N0 > 0.0) || !(params.V0 > 0.0) || !(params.T0 > 0.0)) {
        throw std::invalid_argument("ideal gas reference state requires N0, V0, T0 > 0");
    }
    const double U0 = 1.5 * params.N0 * gas_constant * params.T0;
    c1_ = U0 / (std::pow(params.N0, 5.0 / 3.0) * std::pow(params.V0, -2.0 / 3.0) *
                std::exp(2.0 * params.S0 / (3.0 * params.N0 * gas_constant)));
}

void IdealGas::check_domain(double V, double N) {
    if (!(V > 0.0) || !(N > 0.0)) {
        std::ostringstream msg;
        msg << "ideal gas state outside domain: V = " << V << ", N = " << N;
        throw ModelDomainError(msg.str());
    }
}

double IdealGas::energy(double S, double V, double N) const {
    check_domain(V, N);
    return c1_ * std::pow(N, 5.0 / 3.0) * std::pow(V, -2.0 / 3.0) *
           std::exp(2.0 * S / (3.0 * N * gas_constant));
}

double IdealGas::temperature(double S, double V, double N) const {
    return 2.0 * energy(S, V, N) / (3.0 * N * gas_constant);
}

double IdealGas::pressure(double S, double V, double N) const {
    return (2.0 / 3.0) * energy(S, V, N) / V;
}

double IdealGas::dU_dS(double S, double V, double N) const {
    return temperature(S, V, N);
}

double IdealGas::dU_dV(double S, double V, double N) const {
    return -pressure(S, V, N);
}

double IdealGas::dU_dN(double S, double V, double N) const {
    const double U = energy(S, V, N);
    const double T = 2.0 * U / (3.0 * N * gas_constant);
    return (5.0 / 3.0) * U / N - T * S / N;
}

double IdealGas::chemical_potential(double S, double V, double N) const {
    return dU_dN(S, V, N);
}

double IdealGas::equilibrium_molar_entropy(double T, double mu) {
    return 2.5 * gas_constant - mu / T;
}

double IdealGas::equilibrium_molar_density(double T, double molar_entropy) const {
    return std::pow(1.5 * gas_constant * T / c1_, 1.5) *
           std::exp(-molar_entropy / gas_constant);
}

}  // namespace dirac_thermo
