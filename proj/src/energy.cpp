#include "mvgf/energy.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace mvgf {
namespace {

void check_inputs(const DensityField& rho, const RealField& V, const KernelMultiplier& mult) {
  if (!(rho.grid() == V.grid) || !(rho.grid() == mult.grid)) throw ConfigError("energy: grid mismatch");
  if (!V.is_scalar()) throw ConfigError("energy: V must be scalar");
  V.require_finite("V");
}

}  // namespace

std::string to_csv_row(const EnergyReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.t, r.F, r.U_part,
                r.V_part, r.W_part, r.dissipation, r.mass, r.rho_min, r.rho_max);
  return buf;
}

EnergyReport parse_csv_row(const std::string& line) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',') && v.size() < 9) {
    try {
      v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("malformed energy CSV row: " + line);
    }
  }
  if (v.size() != 9) throw ConfigError("energy CSV row needs 9 numeric columns: " + line);
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

EnergyReport free_energy(const DensityField& rho, const RealField& V, const KernelMultiplier& mult) {
  check_inputs(rho, V, mult);
  const auto r = rho.values();
  const auto v = V.channel(0);
  const auto conv = convolve(mult, rho.field());
  const auto wr = conv.channel(0);

  double u = 0.0, vp = 0.0, wp = 0.0;
  for (std::size_t n = 0; n < r.size(); ++n) {
    if (r[n] > 0.0) u += r[n] * std::log(std::max(r[n], kPositivityFloor));
    vp += v[n] * r[n];
    wp += wr[n] * r[n];
  }
  const double count = static_cast<double>(r.size());
  EnergyReport out;
  out.U_part = u / count;
  out.V_part = vp / count;
  out.W_part = 0.5 * wp / count;
  out.F = out.U_part + out.V_part + out.W_part;
  out.mass = rho.mass();
  out.rho_min = rho.min();
  out.rho_max = rho.max();
  for (double x : {out.F, out.U_part, out.V_part, out.W_part}) {
    if (!std::isfinite(x)) throw NumericalError("free energy is not finite");
  }
  return out;
}

GradientFieldY gradient_field(const DensityField& rho, const RealField& V, const KernelMultiplier& mult) {
  check_inputs(rho, V, mult);
  if (rho.min() < -DensityField::kNegativeTolerance) {
    throw NumericalError("gradient_field: density below the positivity floor");
  }
  RealField chem = convolve(mult, rho.field());
  auto c = chem.channel(0);
  const auto r = rho.values();
  const auto v = V.channel(0);
  for (std::size_t n = 0; n < c.size(); ++n) c[n] += std::log(std::max(r[n], kPositivityFloor)) + v[n];
  RealField y = gradient(chem);
  for (auto& x : y.values) x = -x;
  return {std::move(y)};
}

double dissipation(const DensityField& rho, const GradientFieldY& Y) {
  const auto r = rho.values();
  double s = 0.0;
  for (int a = 0; a < Y.field.channels; ++a) {
    const auto y = Y.field.channel(a);
    for (std::size_t n = 0; n < r.size(); ++n) s += y[n] * y[n] * r[n];
  }
  return s / static_cast<double>(r.size());
}

EnergyReport energy_report(const DensityField& rho, const RealField& V, const KernelMultiplier& mult, double t) {
  auto rep = free_energy(rho, V, mult);
  rep.t = t;
  rep.dissipation = dissipation(rho, gradient_field(rho, V, mult));
  return rep;
}

double interaction_energy_spectral(const DensityField& rho, const KernelMultiplier& mult) {
  const auto c = forward_transform(rho.field());
  const auto coeffs = c.channel(0);
  double s = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) s += mult.w_hat[n] * std::norm(coeffs[n]);
  return 0.5 * s;
}

}  // namespace mvgf
