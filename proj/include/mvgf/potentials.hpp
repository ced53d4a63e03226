#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mvgf/grid.hpp"

namespace mvgf {

/// One term a * cos(2*pi*k.x).
struct CosineMode {
  Wavevector k{0, 0};
  double amplitude = 0.0;
  friend bool operator==(const CosineMode&, const CosineMode&) = default;
};

struct ConfinementSpec {
  enum class Kind { zero, cosine_sum, tabulated };

  Kind kind = Kind::zero;
  std::vector<CosineMode> modes;  // cosine_sum
  std::optional<RealField> table;  // tabulated

  static ConfinementSpec zero() { return {}; }
  static ConfinementSpec cosine_sum(std::vector<CosineMode> modes);
  static ConfinementSpec tabulated(RealField v);
};

/// W(z) = L * d(0, z)^gamma with d the geodesic torus distance.
struct RadialTerm {
  double coefficient = 0.0;
  double exponent = 0.0;
  friend bool operator==(const RadialTerm&, const RadialTerm&) = default;
};

/// Interaction kernel W. Every kind produces a real, even multiplier.
///
/// Keller-Segel attraction is chi > 0 with W = chi * G, where G is the
/// Green function of the Laplacian (zero mean) or of Laplacian - alpha. The
/// multiplier is then negative: the KS equation
///   rho_t = lap rho - div(chi rho grad c),  lap c = -(rho - 1)
/// gives c = -G0 * rho, so -chi rho grad c = rho grad(chi G0 * rho), which is
/// the drift div(rho grad(W * rho)) with W = chi G0 and
/// W^(k) = -chi / (4 pi^2 |k|^2).
struct InteractionSpec {
  enum class Kind { zero, fourier_multiplier, newtonian_green, yukawa_green, radial_power, cosine_sum };

  Kind kind = Kind::zero;
  double chi = 0.0;
  double alpha = 0.0;
  std::vector<RadialTerm> terms;
  std::vector<CosineMode> modes;  // cosine_sum, or explicit multiplier entries

  static InteractionSpec zero() { return {}; }
  static InteractionSpec newtonian(double chi);
  static InteractionSpec yukawa(double chi, double alpha);
  static InteractionSpec radial_power(std::vector<RadialTerm> terms);
  static InteractionSpec cosine_sum(std::vector<CosineMode> modes);
  /// Entries (k, W^(k)); the value is mirrored to -k.
  static InteractionSpec fourier_multiplier(std::vector<CosineMode> entries);

  /// Throws ConfigError naming the violated assumption.
  void validate(int dim) const;
  friend bool operator==(const InteractionSpec&, const InteractionSpec&) = default;
};

/// Real, even Fourier multiplier of W on a grid (flat spectral layout).
struct KernelMultiplier {
  TorusGrid grid;
  std::vector<double> w_hat;

  double at(const Wavevector& k) const { return w_hat[grid.flat_index(k)]; }
};

struct ConfinementFields {
  RealField potential;  // V at nodes
  RealField gradient;   // spectral gradient of the sampled V
};

ConfinementFields build_confinement(const ConfinementSpec& spec, const TorusGrid& grid);

KernelMultiplier kernel_multiplier(const InteractionSpec& spec, const TorusGrid& grid);

/// W * rho via the multiplier.
RealField convolve(const KernelMultiplier& mult, const RealField& rho);

/// Real-space table of grad W with all modes of max-norm above
/// `smoothing_modes` removed.
RealField gridded_grad_kernel(const InteractionSpec& spec, const TorusGrid& grid, int smoothing_modes);
RealField gridded_grad_kernel(const KernelMultiplier& mult, int smoothing_modes);

/// Geodesic distance from 0 to z on the unit torus.
double torus_distance(std::span<const double> z);

/// Samples of W on the grid for radial kernels (node 0 replaced by the cell
/// average where the profile is not smooth there).
RealField sample_radial_kernel(const std::vector<RadialTerm>& terms, const TorusGrid& grid);

}  // namespace mvgf
