#pragma once

#include <iosfwd>
#include <limits>
#include <string>

#include "mvgf/grid.hpp"
#include "mvgf/potentials.hpp"

namespace mvgf {

/// log(rho) is evaluated as log(max(rho, kPositivityFloor)).
inline constexpr double kPositivityFloor = 1e-12;

/// Per-time diagnostic record of the free energy and its dissipation.
struct EnergyReport {
  double t = 0.0;
  double F = 0.0;
  double U_part = 0.0;  // mean(rho log rho)
  double V_part = 0.0;  // mean(V rho)
  double W_part = 0.0;  // 0.5 mean((W * rho) rho)
  double dissipation = std::numeric_limits<double>::quiet_NaN();
  double mass = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
};

/// Column order of the CSV serialization.
inline constexpr const char* kEnergyCsvHeader = "t,F,U_part,V_part,W_part,dissipation,mass,rho_min,rho_max";
std::string to_csv_row(const EnergyReport& r);
EnergyReport parse_csv_row(const std::string& line);

/// Y = -grad(log rho + V + W * rho).
struct GradientFieldY {
  RealField field;
};

/// Free energy parts by uniform-grid quadrature; `dissipation` is left NaN.
EnergyReport free_energy(const DensityField& rho, const RealField& V, const KernelMultiplier& mult);

/// Throws NumericalError if rho drops below -DensityField::kNegativeTolerance.
GradientFieldY gradient_field(const DensityField& rho, const RealField& V, const KernelMultiplier& mult);

/// I(rho) = mean(|Y|^2 rho).
double dissipation(const DensityField& rho, const GradientFieldY& Y);

/// free_energy plus dissipation, stamped with time t.
EnergyReport energy_report(const DensityField& rho, const RealField& V, const KernelMultiplier& mult, double t);

/// W part by Parseval: 0.5 * sum_k W^(k) |rho^(k)|^2.
double interaction_energy_spectral(const DensityField& rho, const KernelMultiplier& mult);

}  // namespace mvgf
