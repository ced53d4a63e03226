#pragma once

#include <cstdint>
#include <vector>

#include "mvgf/energy.hpp"
#include "mvgf/grid.hpp"
#include "mvgf/potentials.hpp"
#include "mvgf/rng.hpp"

namespace mvgf {

/// N particles on [0,1)^dim. Noise for particle i at step s is drawn from the
/// counter-based stream (seed, i, s), so trajectories do not depend on the
/// order in which particles are updated.
struct ParticleState {
  int dim = 1;
  std::vector<double> positions;  // N x dim, particle-major
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  std::size_t size() const { return positions.size() / static_cast<std::size_t>(dim); }
  bool operator==(const ParticleState&) const = default;
};

/// Uniform samples when `initial` is null; otherwise inverse CDF of the cell-wise
/// constant density (1-D) or rejection against rho_max (2-D).
ParticleState init_particles(std::size_t n, int dim, std::uint64_t seed, const DensityField* initial = nullptr);

/// Mesh data shared by every particle in a step.
///
/// The interaction force on particle i is (1/N) sum_{j != i} grad W(X^i - X^j):
/// differentiating H_N = sum_i V(X^i) + (1/(2N)) sum_{i != j} W(X^i - X^j) in X^i
/// hits each unordered pair twice, and grad W is odd since W is even. It is
/// evaluated particle-mesh style: cloud-in-cell deposit, convolution with the
/// spectrum of the truncated grad W table, bilinear interpolation. The
/// deposit and the interpolation share weights and the table is odd, so the
/// self-force cancels.
struct ParticleForces {
  TorusGrid mesh;
  RealField grad_V;            // dim channels
  SpectralField grad_W_hat;    // dim channels; spectrum of gridded_grad_kernel
  bool interacting = false;
  int smoothing_modes = 0;

  static ParticleForces build(const RealField& V, const KernelMultiplier& mult, int smoothing_modes);
};

/// Bilinear (1-D: linear) periodic interpolation of every channel of `f` at x.
void interpolate(const RealField& f, const double* x, double* out);

/// Cloud-in-cell density (mean 1) of the particles on the mesh.
RealField deposit_cic(const ParticleState& s, const TorusGrid& mesh);

/// Interaction force field on the mesh (dim channels), zero if not interacting.
RealField interaction_force_field(const ParticleState& s, const ParticleForces& forces);

/// Euler-Maruyama step X <- X - (grad V + F_int) dt + sqrt(2 T dt) xi, wrapped to [0,1).
ParticleState particle_step(const ParticleState& s, const ParticleForces& forces, double dt, double temperature = 1.0);

struct EmpiricalDensity {
  DensityField base;
  int bandwidth_modes = 0;
};

/// Nearest-node histogram smoothed by the Fejer multiplier prod_j (1 - |k_j| / (B + 1))_+.
EmpiricalDensity empirical_density(const ParticleState& s, const TorusGrid& grid, int bandwidth_modes);

struct ParticleRunConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double temperature = 1.0;
  int bandwidth_modes = 8;
  int log_every = 10;

  void validate() const;
  bool operator==(const ParticleRunConfig&) const = default;
};

struct ParticleRun {
  std::vector<double> times;
  std::vector<EmpiricalDensity> densities;
  /// Free energy and dissipation of each smoothed density.
  std::vector<EnergyReport> reports;
  ParticleState final_state;
};

ParticleRun run_particles(const ParticleState& s, const ParticleForces& forces, const RealField& V,
                          const KernelMultiplier& mult, const ParticleRunConfig& cfg);

}  // namespace mvgf
