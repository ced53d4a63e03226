#include "mvgf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvgf {

void FlowConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("flow.dt must be positive");
  if (!(t_end >= 0.0)) throw ConfigError("flow.t_end must be nonnegative");
  if (!(blowup_linf > 1.0)) throw ConfigError("flow.blowup_linf must exceed 1");
  if (!(adapt_cfl > 0.0)) throw ConfigError("flow.adapt_cfl must be positive");
  if (log_every < 1) throw ConfigError("flow.log_every must be at least 1");
  if (snapshot_every < 0) throw ConfigError("flow.snapshot_every must be nonnegative");
  if (!(conv_tol >= 0.0)) throw ConfigError("flow.conv_tol must be nonnegative");
  if (max_retries < 0) throw ConfigError("flow.max_retries must be nonnegative");
}

const char* to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::converged:
      return "converged";
    case TerminalStatus::t_end_reached:
      return "t_end_reached";
    case TerminalStatus::blowup_detected:
      return "blowup_detected";
    case TerminalStatus::step_failure:
      return "step_failure";
  }
  return "unknown";
}

FlowOperator::FlowOperator(RealField V, RealField grad_V, KernelMultiplier mult, bool dealias)
    : grid_(V.grid), V_(std::move(V)), grad_V_(std::move(grad_V)), mult_(std::move(mult)), dealias_(dealias) {
  if (!(grad_V_.grid == grid_) || !(mult_.grid == grid_)) throw ConfigError("flow: grid mismatch");
  if (grad_V_.channels != grid_.dim()) throw ConfigError("flow: grad V must have dim channels");
}

double FlowOperator::transport(std::span<const double> rho, std::span<const Complex> rho_hat,
                               std::span<Complex> out) const {
  const std::size_t n = grid_.size();
  const Complex i(0.0, 1.0);
  const auto& mask = grid_.dealias_mask();
  std::vector<Complex> phi_hat(n), work(n);
  std::vector<double> drift(n), sq(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) phi_hat[m] = mult_.w_hat[m] * rho_hat[m];
  std::fill(out.begin(), out.end(), Complex{});

  for (int a = 0; a < grid_.dim(); ++a) {
    for (std::size_t m = 0; m < n; ++m) work[m] = i * grid_.derivative_symbol(m, a) * phi_hat[m];
    fft::inverse_real(grid_, work, drift);
    const auto gv = grad_V_.channel(a);
    for (std::size_t m = 0; m < n; ++m) {
      drift[m] += gv[m];
      sq[m] += drift[m] * drift[m];
      drift[m] *= rho[m];
    }
    fft::forward(grid_, std::span<const double>(drift), work);
    for (std::size_t m = 0; m < n; ++m) {
      const double keep = dealias_ ? mask[m] : 1.0;
      out[m] += keep * i * grid_.derivative_symbol(m, a) * work[m];
    }
  }
  return std::sqrt(*std::max_element(sq.begin(), sq.end()));
}

double FlowOperator::max_drift(const DensityField& rho) const {
  std::vector<Complex> rho_hat(grid_.size()), out(grid_.size());
  fft::forward(grid_, rho.values(), rho_hat);
  return transport(rho.values(), rho_hat, out);
}

namespace {

// phi1(z) = (e^z - 1) / z and phi2(z) = (e^z - 1 - z) / z^2, accurate near 0.
double phi1(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

double phi2(double z) {
  if (std::abs(z) < 0.1) {
    double term = 0.5, sum = 0.5;
    for (int n = 3; n <= 10; ++n) {
      term *= z / n;
      sum += term;
    }
    return sum;
  }
  return (std::expm1(z) - z) / (z * z);
}

}  // namespace

bool FlowOperator::try_step(std::span<const double> rho, double dt, std::vector<double>& out) const {
  const std::size_t n = grid_.size();
  std::vector<Complex> rho_hat(n), n1(n), a_hat(n), n2(n);
  std::vector<double> decay(n), p1(n), p2(n), a(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double z = -grid_.laplacian_magnitude(m) * dt;
    decay[m] = std::exp(z);
    p1[m] = dt * phi1(z);
    p2[m] = dt * phi2(z);
  }

  fft::forward(grid_, rho, rho_hat);
  transport(rho, rho_hat, n1);
  for (std::size_t m = 0; m < n; ++m) a_hat[m] = decay[m] * rho_hat[m] + p1[m] * n1[m];
  fft::inverse_real(grid_, a_hat, a);
  transport(a, a_hat, n2);
  for (std::size_t m = 0; m < n; ++m) a_hat[m] += p2[m] * (n2[m] - n1[m]);
  out.resize(n);
  fft::inverse_real(grid_, a_hat, out);

  double hi = 0.0, lo = 0.0;
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericalError("non-finite density after step");
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  return lo >= -1e-6 * hi;
}

StepResult FlowOperator::step(const DensityField& rho, double dt, int max_retries) const {
  if (!(rho.grid() == grid_)) throw ConfigError("flow step: grid mismatch");
  if (!(dt > 0.0)) throw ConfigError("flow step: dt must be positive");
  std::vector<double> next;
  int retries = 0;
  while (!try_step(rho.values(), dt, next)) {
    if (retries == max_retries) {
      throw NumericalError("step failure: negative density persists after " + std::to_string(retries) +
                           " dt halvings");
    }
    dt *= 0.5;
    ++retries;
  }

  // Clip the residual undershoot to the floor and restore the mass.
  const double mass_before = mean(next);
  double clipped = 0.0;
  for (auto& v : next) {
    if (v < kPositivityFloor) {
      clipped += kPositivityFloor - v;
      v = kPositivityFloor;
    }
  }
  clipped /= static_cast<double>(next.size());
  if (clipped > 0.0) {
    const double scale = mass_before / mean(next);
    for (auto& v : next) v *= scale;
  }
  return {DensityField(RealField(grid_, 1, std::move(next))), dt, clipped, retries};
}

DensityField step(const DensityField& rho, const RealField& V, const RealField& grad_V, const KernelMultiplier& mult,
                  double dt, bool dealias) {
  FlowOperator op(V, grad_V, mult, dealias);
  return op.step(rho, dt).rho;
}

TrajectoryLog run(const DensityField& rho0, const FlowOperator& op, const FlowConfig& cfg) {
  cfg.validate();
  if (!(rho0.grid() == op.grid())) throw ConfigError("flow run: grid mismatch");
  const double h = op.grid().spacing();
  TrajectoryLog log;
  DensityField rho = rho0;
  double t = 0.0;

  auto report = [&] {
    log.reports.push_back(energy_report(rho, op.potential(), op.multiplier(), t));
    return log.reports.back();
  };
  auto finish = [&](TerminalStatus s) {
    log.status = s;
    log.t_final = t;
    if (log.reports.empty() || log.reports.back().t != t) {
      try {
        report();
      } catch (const NumericalError&) {
      }
    }
    log.final_state = rho;
    return log;
  };

  if (cfg.snapshot_every > 0) log.snapshots.emplace_back(t, rho);
  if (report().dissipation < cfg.conv_tol) return finish(TerminalStatus::converged);

  const double t_eps = 1e-9 * cfg.dt;
  while (cfg.t_end - t > t_eps) {
    double dt = std::min(cfg.dt, cfg.t_end - t);
    StepResult res;
    try {
      const double drift = op.max_drift(rho);
      if (drift > 0.0) dt = std::min(dt, cfg.adapt_cfl * h / drift);
      res = op.step(rho, dt, cfg.max_retries);
    } catch (const NumericalError& e) {
      log.failure = std::string(e.what()) + " at t = " + std::to_string(t);
      return finish(TerminalStatus::step_failure);
    }
    if (res.clipped / res.dt_used > cfg.max_clip_rate) {
      log.failure = "persistent clipping (under-resolution) at t = " + std::to_string(t);
      return finish(TerminalStatus::step_failure);
    }
    rho = std::move(res.rho);
    t += res.dt_used;
    if (cfg.t_end - t <= t_eps) t = cfg.t_end;
    ++log.steps;
    log.clipped_total += res.clipped;

    if (rho.max() > cfg.blowup_linf) return finish(TerminalStatus::blowup_detected);
    if (log.steps % static_cast<std::size_t>(cfg.log_every) == 0) {
      if (report().dissipation < cfg.conv_tol) return finish(TerminalStatus::converged);
    }
    if (cfg.snapshot_every > 0 && log.steps % static_cast<std::size_t>(cfg.snapshot_every) == 0) {
      log.snapshots.emplace_back(t, rho);
    }
  }
  return finish(TerminalStatus::t_end_reached);
}

TrajectoryLog run(const DensityField& rho0, const RealField& V, const KernelMultiplier& mult, const FlowConfig& cfg) {
  return run(rho0, FlowOperator(V, gradient(V), mult, cfg.dealias), cfg);
}

// ---------------------------------------------------------------------------

FixedPointResult stationary_fixed_point(const DensityField& rho_init, const RealField& V,
                                        const KernelMultiplier& mult, const FixedPointOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (opts.max_iter < 1) throw ConfigError("max_iter must be positive");
  if (rho_init.min() <= 0.0) throw ConfigError("stationary solver needs a positive initial density");
  if (!(rho_init.grid() == V.grid) || !(mult.grid == V.grid)) throw ConfigError("stationary: grid mismatch");

  const auto& grid = V.grid;
  const auto v = V.channel(0);
  std::vector<double> rho(rho_init.values().begin(), rho_init.values().end());
  std::vector<double> gibbs(grid.size());

  FixedPointResult out;
  for (int it = 0; it <= opts.max_iter; ++it) {
    const auto conv = convolve(mult, RealField(grid, 1, rho));
    const auto c = conv.channel(0);
    double lo = c[0] + v[0];
    for (std::size_t n = 0; n < grid.size(); ++n) lo = std::min(lo, c[n] + v[n]);
    for (std::size_t n = 0; n < grid.size(); ++n) gibbs[n] = std::exp(-(c[n] + v[n] - lo));
    const double z = mean(gibbs);
    double update = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      gibbs[n] /= z;
      update = std::max(update, std::abs(gibbs[n] - rho[n]));
    }
    if (!std::isfinite(update)) throw NumericalError("stationary iteration produced non-finite values");
    out.last_update = opts.damping * update;
    if (update < opts.tol) {
      out.converged = true;
      break;
    }
    if (it == opts.max_iter) break;
    for (std::size_t n = 0; n < grid.size(); ++n) rho[n] = (1.0 - opts.damping) * rho[n] + opts.damping * gibbs[n];
    out.iterations = it + 1;
  }
  out.rho = DensityField::normalized(RealField(grid, 1, std::move(rho)));
  out.residual = std::sqrt(std::max(0.0, dissipation(out.rho, gradient_field(out.rho, V, mult))));
  return out;
}

}  // namespace mvgf
