#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mvgf/energy.hpp"
#include "mvgf/grid.hpp"
#include "mvgf/potentials.hpp"

namespace mvgf {

struct FlowConfig {
  enum class FloorPolicy { clip_renormalize };

  double dt = 1e-3;
  double t_end = 1.0;
  bool dealias = true;
  /// dt is capped so that dt * max|grad(V + W*rho)| / h <= adapt_cfl.
  double adapt_cfl = 0.4;
  FloorPolicy floor_policy = FloorPolicy::clip_renormalize;
  double blowup_linf = 1e4;
  int log_every = 1;
  int snapshot_every = 0;  // 0 disables snapshots
  double conv_tol = 1e-12;
  int max_retries = 5;
  /// Clipped L1 mass per unit time above which a step is declared failed.
  double max_clip_rate = 1e-6;

  void validate() const;
  bool operator==(const FlowConfig&) const = default;
};

enum class TerminalStatus { converged, t_end_reached, blowup_detected, step_failure };
const char* to_string(TerminalStatus s);

struct TrajectoryLog {
  std::vector<EnergyReport> reports;
  std::vector<std::pair<double, DensityField>> snapshots;
  TerminalStatus status = TerminalStatus::t_end_reached;
  double t_final = 0.0;
  std::size_t steps = 0;
  double clipped_total = 0.0;
  std::string failure;  // set for step_failure
  DensityField final_state;
};

struct StepResult {
  DensityField rho;
  double dt_used = 0.0;
  double clipped = 0.0;  // L1 mass removed by clipping before renormalization
  int retries = 0;
};

/// Pseudo-spectral right-hand side and integrator for
///   rho_t = lap rho + div(rho grad(V + W * rho)).
///
/// Second-order exponential time differencing (Cox-Matthews ETD2RK) with
/// L = -4 pi^2 |k|^2, E = exp(L dt):
///   a     = E rho^ + dt phi1(L dt) N(rho)
///   rho^+ = a + dt phi2(L dt) (N(a) - N(rho)),
/// phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2. Pure diffusion is
/// propagated exactly and fixed points of the step are exactly the steady
/// states of the semi-discrete equation. N is a spectral divergence, so its
/// k = 0 coefficient vanishes and mass is conserved to roundoff.
class FlowOperator {
 public:
  FlowOperator(RealField V, RealField grad_V, KernelMultiplier mult, bool dealias = true);

  const TorusGrid& grid() const { return grid_; }
  const RealField& potential() const { return V_; }
  const KernelMultiplier& multiplier() const { return mult_; }

  /// Spectral transport term N(rho)^; returns max |grad(V + W*rho)|.
  double transport(std::span<const double> rho, std::span<const Complex> rho_hat, std::span<Complex> out) const;
  double max_drift(const DensityField& rho) const;

  /// One step with up to `max_retries` halvings of dt on undershoot.
  StepResult step(const DensityField& rho, double dt, int max_retries = 5) const;

 private:
  bool try_step(std::span<const double> rho, double dt, std::vector<double>& out) const;

  TorusGrid grid_;
  RealField V_;
  RealField grad_V_;
  KernelMultiplier mult_;
  bool dealias_;
};

/// Single step from scratch (builds a FlowOperator).
DensityField step(const DensityField& rho, const RealField& V, const RealField& grad_V, const KernelMultiplier& mult,
                  double dt, bool dealias = true);

TrajectoryLog run(const DensityField& rho0, const FlowOperator& op, const FlowConfig& cfg);
TrajectoryLog run(const DensityField& rho0, const RealField& V, const KernelMultiplier& mult, const FlowConfig& cfg);

struct FixedPointOptions {
  double damping = 1.0;  // lambda in (0, 1]
  int max_iter = 10000;
  double tol = 1e-13;
};

struct FixedPointResult {
  DensityField rho;
  int iterations = 0;
  bool converged = false;
  double last_update = 0.0;  // sup-norm distance between the last two iterates
  double residual = 0.0;     // sqrt(I(rho)), the L^2_rho norm of Y
};

/// Damped iteration rho <- (1 - lambda) rho + lambda exp(-V - W*rho) / Z.
FixedPointResult stationary_fixed_point(const DensityField& rho_init, const RealField& V,
                                        const KernelMultiplier& mult, const FixedPointOptions& opts = {});

}  // namespace mvgf
