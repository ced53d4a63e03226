#include "mvgf/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mvgf {

namespace {

// Reserved step counters for initialization draws.
constexpr std::uint64_t kInitStream = std::numeric_limits<std::uint64_t>::max();

double wrap(double x) {
  x -= std::floor(x);
  return x >= 1.0 ? 0.0 : x;
}

struct Stencil {
  std::size_t idx[4];
  double w[4];
  int count;
};

// Linear weights in 1-D, bilinear in 2-D, on the periodic node lattice.
Stencil stencil(const TorusGrid& g, const double* x) {
  const int m = g.points_per_axis();
  Stencil st{};
  int i0[2] = {0, 0}, i1[2] = {0, 0};
  double f[2] = {0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const double s = x[a] * m;
    const double fl = std::floor(s);
    f[a] = s - fl;
    i0[a] = static_cast<int>(fl) % m;
    if (i0[a] < 0) i0[a] += m;
    i1[a] = (i0[a] + 1) % m;
  }
  if (g.dim() == 1) {
    st.count = 2;
    st.idx[0] = i0[0];
    st.idx[1] = i1[0];
    st.w[0] = 1.0 - f[0];
    st.w[1] = f[0];
  } else {
    st.count = 4;
    const std::size_t mm = m;
    st.idx[0] = i0[0] * mm + i0[1];
    st.idx[1] = i0[0] * mm + i1[1];
    st.idx[2] = i1[0] * mm + i0[1];
    st.idx[3] = i1[0] * mm + i1[1];
    st.w[0] = (1.0 - f[0]) * (1.0 - f[1]);
    st.w[1] = (1.0 - f[0]) * f[1];
    st.w[2] = f[0] * (1.0 - f[1]);
    st.w[3] = f[0] * f[1];
  }
  return st;
}

std::size_t nearest_node(const TorusGrid& g, const double* x) {
  const int m = g.points_per_axis();
  std::size_t flat = 0;
  for (int a = 0; a < g.dim(); ++a) {
    int i = static_cast<int>(std::lround(x[a] * m)) % m;
    if (i < 0) i += m;
    flat = flat * m + i;
  }
  return flat;
}

}  // namespace

ParticleState init_particles(std::size_t n, int dim, std::uint64_t seed, const DensityField* initial) {
  if (n < 1) throw ConfigError("init_particles: need at least one particle");
  if (dim != 1 && dim != 2) throw ConfigError("init_particles: unsupported dimension " + std::to_string(dim));
  if (initial && initial->grid().dim() != dim) throw ConfigError("init_particles: initial density has wrong dimension");
  ParticleState s;
  s.dim = dim;
  s.seed = seed;
  s.positions.resize(n * dim);
  const CounterRng rng(seed);

  if (!initial) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = rng.uniforms(i, kInitStream);
      for (int a = 0; a < dim; ++a) s.positions[i * dim + a] = wrap(u[a]);
    }
    return s;
  }

  const auto& g = initial->grid();
  const auto rho = initial->values();
  const double h = g.spacing();
  if (dim == 1) {
    // Cell i is [x_i - h/2, x_i + h/2) with constant density rho_i.
    std::vector<double> cdf(rho.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
      acc += std::max(rho[k], 0.0);
      cdf[k] = acc;
    }
    for (auto& c : cdf) c /= acc;
    cdf.back() = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = rng.uniforms(i, kInitStream);
      const double target = u[0] * (1.0 - 1e-16);
      const std::size_t k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
      const double lo = k == 0 ? 0.0 : cdf[k - 1];
      const double frac = cdf[k] > lo ? (target - lo) / (cdf[k] - lo) : 0.5;
      s.positions[i] = wrap((static_cast<double>(k) - 0.5 + frac) * h);
    }
    return s;
  }

  const double rho_max = initial->max() / initial->mass();
  if (rho_max > 100.0) {
    throw NumericalError("init_particles: rejection efficiency below 1% (rho_max = " + std::to_string(rho_max) + ")");
  }
  const double mass = initial->mass();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt > 100000) throw NumericalError("init_particles: rejection sampling did not terminate");
      const auto u = rng.uniforms(i, kInitStream - 2 * attempt);
      const auto acc = rng.uniforms(i, kInitStream - 2 * attempt - 1);
      const double x[2] = {wrap(u[0]), wrap(u[1])};
      if (acc[0] * rho_max <= rho[nearest_node(g, x)] / mass) {
        s.positions[2 * i] = x[0];
        s.positions[2 * i + 1] = x[1];
        break;
      }
    }
  }
  return s;
}

ParticleForces ParticleForces::build(const RealField& V, const KernelMultiplier& mult, int smoothing_modes) {
  if (!(V.grid == mult.grid)) throw ConfigError("particle forces: V and W live on different grids");
  ParticleForces f{V.grid, gradient(V), SpectralField(V.grid, V.grid.dim()), false, smoothing_modes};
  for (double w : mult.w_hat) f.interacting = f.interacting || w != 0.0;
  const auto table = gridded_grad_kernel(mult, smoothing_modes);
  f.grad_W_hat = forward_transform(table);
  return f;
}

void interpolate(const RealField& f, const double* x, double* out) {
  const auto st = stencil(f.grid, x);
  for (int c = 0; c < f.channels; ++c) {
    const auto v = f.channel(c);
    double s = 0.0;
    for (int k = 0; k < st.count; ++k) s += st.w[k] * v[st.idx[k]];
    out[c] = s;
  }
}

RealField deposit_cic(const ParticleState& s, const TorusGrid& mesh) {
  if (s.dim != mesh.dim()) throw ConfigError("deposit: particle and mesh dimensions differ");
  RealField rho = RealField::scalar(mesh);
  auto v = rho.channel(0);
  const double w = static_cast<double>(mesh.size()) / static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto st = stencil(mesh, &s.positions[i * s.dim]);
    for (int k = 0; k < st.count; ++k) v[st.idx[k]] += w * st.w[k];
  }
  return rho;
}

RealField interaction_force_field(const ParticleState& s, const ParticleForces& forces) {
  const auto& g = forces.mesh;
  if (!forces.interacting) return RealField::vector(g);
  const auto rho_hat = forward_transform(deposit_cic(s, g));
  SpectralField out(g, g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    auto dst = out.channel(a);
    const auto src = forces.grad_W_hat.channel(a);
    const auto r = rho_hat.channel(0);
    for (std::size_t n = 0; n < g.size(); ++n) dst[n] = src[n] * r[n];
  }
  return inverse_transform(out);
}

ParticleState particle_step(const ParticleState& s, const ParticleForces& forces, double dt, double temperature) {
  if (!(dt > 0.0)) throw ConfigError("particle_step: dt must be positive");
  if (!(temperature >= 0.0)) throw ConfigError("particle_step: temperature must be nonnegative");
  if (s.dim != forces.mesh.dim()) throw ConfigError("particle_step: dimension mismatch");
  const RealField fint = interaction_force_field(s, forces);
  const CounterRng rng(s.seed);
  const double sigma = std::sqrt(2.0 * temperature * dt);
  const int d = s.dim;

  ParticleState next = s;
  next.step = s.step + 1;
  double gv[2], gw[2];
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double* x = &s.positions[i * d];
    interpolate(forces.grad_V, x, gv);
    interpolate(fint, x, gw);
    std::array<double, 2> xi{0.0, 0.0};
    if (sigma > 0.0) xi = rng.normals(i, s.step);
    for (int a = 0; a < d; ++a) {
      const double y = x[a] - (gv[a] + gw[a]) * dt + sigma * xi[a];
      if (!std::isfinite(y)) {
        throw NumericalError("non-finite particle position at step " + std::to_string(s.step));
      }
      next.positions[i * d + a] = wrap(y);
    }
  }
  return next;
}

EmpiricalDensity empirical_density(const ParticleState& s, const TorusGrid& grid, int bandwidth_modes) {
  if (s.dim != grid.dim()) throw ConfigError("empirical_density: dimension mismatch");
  if (bandwidth_modes < 0 || 2 * bandwidth_modes > grid.points_per_axis()) {
    throw ConfigError("bandwidth_modes must lie in [0, M/2]");
  }
  RealField hist = RealField::scalar(grid);
  auto v = hist.channel(0);
  const double w = static_cast<double>(grid.size()) / static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) v[nearest_node(grid, &s.positions[i * s.dim])] += w;

  auto coeffs = forward_transform(hist);
  auto c = coeffs.channel(0);
  const double b1 = bandwidth_modes + 1.0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const auto k = grid.wavevector(n);
    double m = 1.0;
    for (int a = 0; a < grid.dim(); ++a) m *= std::max(0.0, 1.0 - std::abs(k[a]) / b1);
    c[n] *= m;
  }
  auto smooth = inverse_transform(coeffs);
  for (auto& x : smooth.values) x = std::max(x, 0.0);
  return {DensityField::normalized(std::move(smooth)), bandwidth_modes};
}

void ParticleRunConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("particles.dt must be positive");
  if (!(t_end >= 0.0)) throw ConfigError("particles.t_end must be nonnegative");
  if (!(temperature >= 0.0)) throw ConfigError("particles.temperature must be nonnegative");
  if (log_every < 1) throw ConfigError("particles.log_every must be at least 1");
}

ParticleRun run_particles(const ParticleState& s0, const ParticleForces& forces, const RealField& V,
                          const KernelMultiplier& mult, const ParticleRunConfig& cfg) {
  cfg.validate();
  const auto steps = static_cast<std::uint64_t>(std::llround(cfg.t_end / cfg.dt));
  ParticleRun run;
  ParticleState s = s0;
  auto record = [&](double t) {
    auto emp = empirical_density(s, forces.mesh, cfg.bandwidth_modes);
    run.reports.push_back(energy_report(emp.base, V, mult, t));
    run.times.push_back(t);
    run.densities.push_back(std::move(emp));
  };
  record(0.0);
  for (std::uint64_t k = 1; k <= steps; ++k) {
    s = particle_step(s, forces, cfg.dt, cfg.temperature);
    if (k % static_cast<std::uint64_t>(cfg.log_every) == 0 || k == steps) record(k * cfg.dt);
  }
  run.final_state = std::move(s);
  return run;
}

}  // namespace mvgf
