#pragma once

namespace dirac_thermo {

/// Molar gas constant, J/(mol K).
inline constexpr double gas_constant = 8.31446261815324;

/// Reference state fixing the energy scale of the closure: at
/// (S0, V0, N0) the gas temperature is T0.
struct IdealGasParams {
    double N0 = 0.002;
    double S0 = 0.0;
    double V0 = 5e-3;
    double T0 = 300.0;
};

/// Monatomic ideal gas internal energy
///   U(S, V, N) = c1 N^{5/3} V^{-2/3} exp(2S / (3 N R)),
/// with c1 calibrated so that U(S0, V0, N0) = (3/2) N0 R T0. The closure
/// satisfies T = dU/dS = 2U/(3NR), pressure p = -dU/dV = (2/3) U/V > 0, and
/// chemical potential mu = dU/dN = (5/2) R T - T S / N.
class IdealGas {
  public:
    explicit IdealGas(const IdealGasParams& params);

    double energy(double S, double V, double N) const;
    double temperature(double S, double V, double N) const;
    double pressure(double S, double V, double N) const;
    double chemical_potential(double S, double V, double N) const;

    double dU_dS(double S, double V, double N) const;
    double dU_dV(double S, double V, double N) const;
    double dU_dN(double S, double V, double N) const;

    /// Entropy per mole at equilibrium with an environment at (T, mu):
    /// s = (5/2) R - mu / T.
    static double equilibrium_molar_entropy(double T, double mu);
    /// Molar density n = N/V at which the gas at temperature T has molar
    /// entropy s.
    double equilibrium_molar_density(double T, double molar_entropy) const;

    const IdealGasParams& params() const { return params_; }
    double c1() const { return c1_; }

  private:
    /// Guards V > 0, N > 0 (ModelDomainError otherwise).
    static void check_domain(double V, double N);

    IdealGasParams params_;
    double c1_ = 0.0;
};

}  // namespace dirac_thermo
