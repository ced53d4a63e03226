#include "mvgf/potentials.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mvgf {

using std::numbers::pi;

namespace {

void require_representable(const std::vector<CosineMode>& modes, const TorusGrid& grid, const char* what) {
  for (const auto& m : modes) {
    if (!std::isfinite(m.amplitude)) throw ConfigError(std::string(what) + ": non-finite amplitude");
    for (int a = 0; a < 2; ++a) {
      if (a >= grid.dim() && m.k[a] != 0) {
        throw ConfigError(std::string(what) + ": wavevector has more components than the grid dimension");
      }
      if (2 * std::abs(m.k[a]) >= grid.points_per_axis()) {
        throw ConfigError(std::string(what) + ": mode beyond the grid's resolvable band");
      }
    }
  }
}

// Average of r^gamma over the cell [-h/2, h/2]^dim.
double cell_average_power(double gamma, double h, int dim) {
  const double half = 0.5 * h;
  if (dim == 1) return std::pow(half, gamma) / (gamma + 1.0);
  // Eight congruent triangles; integrate r^(gamma+1) dr dtheta in polar form.
  const int n = 2000;
  const double upper = pi / 4.0;
  const double dt = upper / n;
  auto integrand = [&](double theta) { return std::pow(half / std::cos(theta), gamma + 2.0) / (gamma + 2.0); };
  double sum = integrand(0.0) + integrand(upper);
  for (int i = 1; i < n; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * integrand(i * dt);
  return 8.0 * (sum * dt / 3.0) / (h * h);
}

}  // namespace

ConfinementSpec ConfinementSpec::cosine_sum(std::vector<CosineMode> modes) {
  ConfinementSpec s;
  s.kind = Kind::cosine_sum;
  s.modes = std::move(modes);
  return s;
}

ConfinementSpec ConfinementSpec::tabulated(RealField v) {
  if (!v.is_scalar()) throw ConfigError("tabulated V must be a scalar field");
  v.require_finite("tabulated V");
  ConfinementSpec s;
  s.kind = Kind::tabulated;
  s.table = std::move(v);
  return s;
}

InteractionSpec InteractionSpec::newtonian(double chi) {
  InteractionSpec s;
  s.kind = Kind::newtonian_green;
  s.chi = chi;
  return s;
}

InteractionSpec InteractionSpec::yukawa(double chi, double alpha) {
  InteractionSpec s;
  s.kind = Kind::yukawa_green;
  s.chi = chi;
  s.alpha = alpha;
  return s;
}

InteractionSpec InteractionSpec::radial_power(std::vector<RadialTerm> terms) {
  InteractionSpec s;
  s.kind = Kind::radial_power;
  s.terms = std::move(terms);
  return s;
}

InteractionSpec InteractionSpec::cosine_sum(std::vector<CosineMode> modes) {
  InteractionSpec s;
  s.kind = Kind::cosine_sum;
  s.modes = std::move(modes);
  return s;
}

InteractionSpec InteractionSpec::fourier_multiplier(std::vector<CosineMode> entries) {
  InteractionSpec s;
  s.kind = Kind::fourier_multiplier;
  s.modes = std::move(entries);
  return s;
}

void InteractionSpec::validate(int dim) const {
  switch (kind) {
    case Kind::zero:
      return;
    case Kind::newtonian_green:
      if (!std::isfinite(chi)) throw ConfigError("W.chi must be finite");
      return;
    case Kind::yukawa_green:
      if (!std::isfinite(chi)) throw ConfigError("W.chi must be finite");
      if (!(alpha > 0.0)) {
        throw ConfigError("yukawa_green requires W.alpha > 0 (Green function of lap - alpha, alpha > 0)");
      }
      return;
    case Kind::radial_power:
      if (terms.empty()) throw ConfigError("radial_power needs at least one (L, gamma) term");
      for (const auto& t : terms) {
        if (!std::isfinite(t.coefficient) || !std::isfinite(t.exponent)) {
          throw ConfigError("radial_power terms must be finite");
        }
        if (t.exponent < 2.0 - dim) {
          throw ConfigError("radial_power exponent " + std::to_string(t.exponent) + " < 2 - n = " +
                            std::to_string(2 - dim) +
                            " violates the growth bound (A3, at most Coulomb-type singularity)");
        }
      }
      return;
    case Kind::cosine_sum:
    case Kind::fourier_multiplier:
      for (const auto& m : modes) {
        if (!std::isfinite(m.amplitude)) throw ConfigError("W modes must be finite");
      }
      return;
  }
}

// ---------------------------------------------------------------------------

ConfinementFields build_confinement(const ConfinementSpec& spec, const TorusGrid& grid) {
  RealField v = RealField::scalar(grid);
  switch (spec.kind) {
    case ConfinementSpec::Kind::zero:
      break;
    case ConfinementSpec::Kind::cosine_sum: {
      require_representable(spec.modes, grid, "V");
      auto values = v.channel(0);
      for (std::size_t n = 0; n < grid.size(); ++n) {
        const auto x = grid.node(n);
        double s = 0.0;
        for (const auto& m : spec.modes) s += m.amplitude * std::cos(2.0 * pi * (m.k[0] * x[0] + m.k[1] * x[1]));
        values[n] = s;
      }
      break;
    }
    case ConfinementSpec::Kind::tabulated:
      if (!spec.table || !(spec.table->grid == grid)) {
        throw ConfigError("tabulated V is defined on a different grid");
      }
      v = *spec.table;
      break;
  }
  RealField grad = spec.kind == ConfinementSpec::Kind::zero ? RealField::vector(grid) : gradient(v);
  return {std::move(v), std::move(grad)};
}

double torus_distance(std::span<const double> z) {
  double s = 0.0;
  for (double c : z) {
    double r = c - std::floor(c);
    r = std::min(r, 1.0 - r);
    s += r * r;
  }
  return std::sqrt(s);
}

RealField sample_radial_kernel(const std::vector<RadialTerm>& terms, const TorusGrid& grid) {
  RealField w = RealField::scalar(grid);
  auto values = w.channel(0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const auto x = grid.node(n);
    const double d = torus_distance(std::span<const double>(x.data(), grid.dim()));
    double s = 0.0;
    for (const auto& t : terms) {
      if (n == 0) {
        // Profiles below quadratic order are not smooth at the origin.
        s += t.exponent == 0.0 ? t.coefficient
             : t.exponent < 2.0 ? t.coefficient * cell_average_power(t.exponent, grid.spacing(), grid.dim())
                                : 0.0;
      } else {
        s += t.coefficient * std::pow(d, t.exponent);
      }
    }
    values[n] = s;
  }
  return w;
}

KernelMultiplier kernel_multiplier(const InteractionSpec& spec, const TorusGrid& grid) {
  spec.validate(grid.dim());
  KernelMultiplier out{grid, std::vector<double>(grid.size(), 0.0)};
  auto& w = out.w_hat;
  switch (spec.kind) {
    case InteractionSpec::Kind::zero:
      break;
    case InteractionSpec::Kind::newtonian_green:
      for (std::size_t n = 1; n < grid.size(); ++n) w[n] = -spec.chi / grid.laplacian_magnitude(n);
      w[0] = 0.0;
      break;
    case InteractionSpec::Kind::yukawa_green:
      for (std::size_t n = 0; n < grid.size(); ++n) w[n] = -spec.chi / (grid.laplacian_magnitude(n) + spec.alpha);
      break;
    case InteractionSpec::Kind::radial_power: {
      const auto coeffs = forward_transform(sample_radial_kernel(spec.terms, grid));
      auto c = coeffs.channel(0);
      // The sampled kernel is even, so the coefficients are real and even up
      // to roundoff; symmetrize to make both properties exact.
      for (std::size_t n = 0; n < grid.size(); ++n) {
        w[n] = 0.5 * (c[n].real() + c[grid.negated_index(n)].real());
      }
      break;
    }
    case InteractionSpec::Kind::cosine_sum:
      require_representable(spec.modes, grid, "W");
      for (const auto& m : spec.modes) {
        const auto n = grid.flat_index(m.k);
        if (n == 0) {
          w[0] += m.amplitude;
        } else {
          w[n] += 0.5 * m.amplitude;
          w[grid.negated_index(n)] += 0.5 * m.amplitude;
        }
      }
      break;
    case InteractionSpec::Kind::fourier_multiplier: {
      require_representable(spec.modes, grid, "W");
      std::vector<char> set(grid.size(), 0);
      for (const auto& m : spec.modes) {
        const auto n = grid.flat_index(m.k);
        const auto neg = grid.negated_index(n);
        for (auto idx : {n, neg}) {
          if (set[idx] && w[idx] != m.amplitude) {
            throw ConfigError("fourier_multiplier is not even in k (A2: W must be centrally symmetric)");
          }
          w[idx] = m.amplitude;
          set[idx] = 1;
        }
      }
      break;
    }
  }
  for (double v : w) {
    if (!std::isfinite(v)) throw NumericalError("kernel multiplier is not finite");
  }
  return out;
}

RealField convolve(const KernelMultiplier& mult, const RealField& rho) {
  if (!(mult.grid == rho.grid)) throw ConfigError("convolve: grid mismatch");
  if (!rho.is_scalar()) throw ConfigError("convolve expects a scalar field");
  auto c = forward_transform(rho);
  auto coeffs = c.channel(0);
  for (std::size_t n = 0; n < coeffs.size(); ++n) coeffs[n] *= mult.w_hat[n];
  return inverse_transform(c);
}

RealField gridded_grad_kernel(const KernelMultiplier& mult, int smoothing_modes) {
  const auto& grid = mult.grid;
  if (smoothing_modes < 0 || 2 * smoothing_modes > grid.points_per_axis()) {
    throw ConfigError("smoothing_modes must lie in [0, M/2]");
  }
  SpectralField grad(grid, grid.dim());
  const Complex i(0.0, 1.0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const auto k = grid.wavevector(n);
    if (std::max(std::abs(k[0]), std::abs(k[1])) > smoothing_modes) continue;
    for (int a = 0; a < grid.dim(); ++a) grad.channel(a)[n] = i * grid.derivative_symbol(n, a) * mult.w_hat[n];
  }
  return inverse_transform(grad);
}

RealField gridded_grad_kernel(const InteractionSpec& spec, const TorusGrid& grid, int smoothing_modes) {
  return gridded_grad_kernel(kernel_multiplier(spec, grid), smoothing_modes);
}

}  // namespace mvgf
