#include "mvgf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mvgf {

namespace {

void require_same_grid(const DensityField& mu, const DensityField& nu, const char* what) {
  if (!(mu.grid() == nu.grid())) throw ConfigError(std::string(what) + ": densities live on different grids");
}

// Cumulative masses of the atoms, normalized so the last entry is exactly 1.
std::vector<double> cumulative(std::span<const double> v, double total) {
  std::vector<double> c(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v[i];
    c[i] = s / total;
  }
  c.back() = 1.0;
  return c;
}

// int_0^1 (Q_mu(u) - Q_nu(u + alpha))^2 du with Q_nu lifted: Q_nu(u + 1) = Q_nu(u) + 1.
double lifted_cost(const std::vector<double>& cmu, const std::vector<double>& cnu, double h, double alpha) {
  const std::size_t m = cmu.size();
  const double shift = std::floor(alpha);
  const double a = alpha - shift;
  std::size_t i = 0;
  std::size_t j = static_cast<std::size_t>(std::upper_bound(cnu.begin(), cnu.end(), a) - cnu.begin());
  double wrap = 0.0;
  if (j == m) {
    j = 0;
    wrap = 1.0;
  }
  double u = 0.0, s = 0.0;
  while (u < 1.0 && i < m) {
    const double end_mu = cmu[i];
    const double end_nu = cnu[j] + wrap - a;
    const double end = std::min({end_mu, end_nu, 1.0});
    const double diff = i * h - (j * h + wrap + shift);
    s += (end - u) * diff * diff;
    u = end;
    if (end == end_mu) ++i;
    if (end == end_nu) {
      if (++j == m) {
        j = 0;
        wrap += 1.0;
      }
    }
  }
  return s;
}

// Minimizes a convex cost of the cut shift alpha over [-1, 1]: golden section
// to a bracket of width 1e-14, then a local scan around it.
template <class Cost>
double minimize_over_shift(const Cost& cost) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = -1.0, hi = 1.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = cost(x1), f2 = cost(x2);
  while (hi - lo > 1e-14) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = cost(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = cost(x2);
    }
  }
  double best = std::min(f1, f2);
  const double w = std::max(hi - lo, 1e-13);
  for (int k = -8; k <= 8; ++k) best = std::min(best, cost(0.5 * (lo + hi) + k * w));
  return std::max(best, 0.0);
}

// Linear piece of a quantile function: u in [u0, u1] maps to [x0, x1].
struct QuantilePiece {
  double u0, u1, x0, x1;
  double at(double u) const { return u1 > u0 ? x0 + (x1 - x0) * (u - u0) / (u1 - u0) : x0; }
};

// Quantile function of the cell-wise constant density whose cell i is
// [x_i - h/2, x_i + h/2]; empty cells produce jumps.
std::vector<QuantilePiece> cell_quantile(std::span<const double> v, double total, double h) {
  std::vector<QuantilePiece> q;
  double c = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = std::max(v[i], 0.0) / total;
    if (m <= 0.0) continue;
    const double x = static_cast<double>(i) * h;
    q.push_back({c, c + m, x - 0.5 * h, x + 0.5 * h});
    c += m;
  }
  q.back().u1 = 1.0;
  return q;
}

// int_0^1 (Q_mu(u) - Q_nu(u + alpha))^2 du for piecewise linear quantiles;
// exact on every piece of the common refinement.
double lifted_cost_cells(const std::vector<QuantilePiece>& qmu, const std::vector<QuantilePiece>& qnu, double alpha) {
  const double shift = std::floor(alpha);
  const double a = alpha - shift;
  // Q_nu(. + a) on [0, 1], assembled from the periodic lift.
  std::vector<QuantilePiece> qs;
  qs.reserve(qnu.size() + 2);
  for (int lift = 0; lift <= 1; ++lift) {
    for (const auto& p : qnu) {
      const double u0 = p.u0 + lift - a, u1 = p.u1 + lift - a;
      if (u1 <= 0.0 || u0 >= 1.0) continue;
      const double c0 = std::max(u0, 0.0), c1 = std::min(u1, 1.0);
      if (c1 <= c0) continue;
      const double x0 = p.at(c0 + a - lift) + lift + shift, x1 = p.at(c1 + a - lift) + lift + shift;
      qs.push_back({c0, c1, x0, x1});
    }
  }
  double s = 0.0, u = 0.0;
  std::size_t i = 0, j = 0;
  while (i < qmu.size() && j < qs.size()) {
    const double end = std::min(qmu[i].u1, qs[j].u1);
    if (end > u) {
      const double A = qmu[i].at(u) - qs[j].at(u);
      const double B = qmu[i].at(end) - qs[j].at(end);
      s += (end - u) * (A * A + A * B + B * B) / 3.0;
      u = end;
    }
    if (qmu[i].u1 <= end) ++i;
    if (qs[j].u1 <= end) ++j;
  }
  return s;
}

void require_circle_pair(const DensityField& mu, const DensityField& nu) {
  require_same_grid(mu, nu, "wasserstein2_circle");
  if (mu.grid().dim() != 1) throw ConfigError("wasserstein2_circle needs a 1-D grid");
  const double d = mu.mass() - nu.mass();
  if (std::abs(d) > 1e-10) throw ConfigError("wasserstein2_circle: mass mismatch " + std::to_string(d));
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : (syy == 0.0 ? 1.0 : 0.0);
  return f;
}

}  // namespace

double wasserstein2_circle_squared(const DensityField& mu, const DensityField& nu) {
  require_circle_pair(mu, nu);
  const double m_mu = mu.mass(), m_nu = nu.mass();
  const std::size_t m = mu.grid().size();
  const auto cmu = cumulative(mu.values(), m_mu * m);
  const auto cnu = cumulative(nu.values(), m_nu * m);
  const double h = mu.grid().spacing();
  return minimize_over_shift([&](double alpha) { return lifted_cost(cmu, cnu, h, alpha); });
}

double wasserstein2_circle(const DensityField& mu, const DensityField& nu) {
  return std::sqrt(wasserstein2_circle_squared(mu, nu));
}

double wasserstein2_circle_cells_squared(const DensityField& mu, const DensityField& nu) {
  require_circle_pair(mu, nu);
  const std::size_t m = mu.grid().size();
  const double h = mu.grid().spacing();
  const auto qmu = cell_quantile(mu.values(), mu.mass() * m, h);
  const auto qnu = cell_quantile(nu.values(), nu.mass() * m, h);
  return minimize_over_shift([&](double alpha) { return lifted_cost_cells(qmu, qnu, alpha); });
}

double wasserstein2_circle_cells(const DensityField& mu, const DensityField& nu) {
  return std::sqrt(wasserstein2_circle_cells_squared(mu, nu));
}

double total_variation(const DensityField& mu, const DensityField& nu) { return l1_distance(mu, nu); }

double tv_d2_bound(const DensityField& mu, const DensityField& nu) {
  const double diam = std::sqrt(static_cast<double>(mu.grid().dim())) / 2.0;
  return diam * std::sqrt(total_variation(mu, nu));
}

double l1_distance(const DensityField& mu, const DensityField& nu) {
  require_same_grid(mu, nu, "l1_distance");
  const auto a = mu.values(), b = nu.values();
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += std::abs(a[n] - b[n]);
  return s / static_cast<double>(a.size());
}

double l2_distance(const DensityField& mu, const DensityField& nu) {
  require_same_grid(mu, nu, "l2_distance");
  const auto a = mu.values(), b = nu.values();
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += (a[n] - b[n]) * (a[n] - b[n]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double linf_distance(const DensityField& mu, const DensityField& nu) {
  require_same_grid(mu, nu, "linf_distance");
  const auto a = mu.values(), b = nu.values();
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s = std::max(s, std::abs(a[n] - b[n]));
  return s;
}

// ---------------------------------------------------------------------------

LojaFit lojasiewicz_fit(const std::vector<EnergyReport>& reports, const LojaFitOptions& opts) {
  if (reports.empty()) throw NumericalError("lojasiewicz_fit: empty trajectory");
  if (opts.min_points < 3) throw ConfigError("lojasiewicz_fit: min_points must be at least 3");
  const auto& last = reports.back();
  if (!opts.F_inf && !(last.dissipation < opts.conv_tol)) {
    throw NumericalError("lojasiewicz_fit: trajectory not converged (terminal dissipation " +
                         std::to_string(last.dissipation) + ")");
  }
  LojaFit fit;
  fit.F_inf = opts.F_inf.value_or(last.F);
  fit.noise_floor = opts.noise_floor.value_or(64.0 * std::numeric_limits<double>::epsilon() *
                                              std::max(1.0, std::abs(fit.F_inf)));

  std::vector<double> t, x, y;
  for (const auto& r : reports) {
    const double z = r.F - fit.F_inf;
    if (z > 10.0 * fit.noise_floor && r.dissipation > 0.0 && std::isfinite(r.dissipation)) {
      t.push_back(r.t);
      x.push_back(std::log(z));
      y.push_back(std::log(r.dissipation));
    }
  }
  const int n = static_cast<int>(t.size());
  if (n < opts.min_points) {
    throw NumericalError("lojasiewicz_fit: too few points above the noise floor (" + std::to_string(n) + " < " +
                         std::to_string(opts.min_points) + ")");
  }
  for (int j = 0; j + opts.min_points <= n; ++j) {
    const auto line = least_squares(std::span(x).subspan(j), std::span(y).subspan(j));
    if (line.r2 >= opts.r2_min) {
      fit.slope = line.slope;
      fit.intercept = line.intercept;
      fit.r2 = line.r2;
      fit.theta = line.slope / 2.0;
      fit.c = std::exp(line.intercept / 2.0);
      fit.t_lo = t[j];
      fit.t_hi = t.back();
      fit.n_points = n - j;
      fit.out_of_band = fit.theta < 0.45 || fit.theta > 1.05;
      fit.outside_unit_range = fit.theta < 0.5 || fit.theta >= 1.0;
      return fit;
    }
  }
  throw NumericalError("lojasiewicz_fit: no suffix window reaches r2 >= " + std::to_string(opts.r2_min));
}

LojaFit lojasiewicz_fit(const TrajectoryLog& log, const LojaFitOptions& opts) {
  return lojasiewicz_fit(log.reports, opts);
}

const char* to_string(RateRegime r) { return r == RateRegime::exponential ? "exponential" : "algebraic"; }

double predicted_rate(const LojaFit& fit) {
  if (fit.theta <= kExponentialThetaCutoff) return 0.5 * fit.c * fit.c;
  return (1.0 - fit.theta) / (2.0 * fit.theta - 1.0);
}

RateCheck rate_check(const LojaFit& fit, std::span<const double> times, std::span<const double> dist,
                     double dist_floor) {
  if (times.size() != dist.size()) throw ConfigError("rate_check: times and distances differ in length");
  RateCheck rc;
  rc.regime = fit.theta <= kExponentialThetaCutoff ? RateRegime::exponential : RateRegime::algebraic;
  rc.predicted_rate = predicted_rate(fit);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < fit.t_lo || times[i] > fit.t_hi || !(dist[i] > dist_floor)) continue;
    if (rc.regime == RateRegime::algebraic && !(times[i] > 0.0)) continue;
    x.push_back(rc.regime == RateRegime::exponential ? times[i] : std::log(times[i]));
    y.push_back(std::log(dist[i]));
  }
  if (x.size() < 3) throw NumericalError("rate_check: distance series below the noise floor in the fit window");
  rc.n_points = static_cast<int>(x.size());
  rc.fitted_rate = -least_squares(x, y).slope;
  rc.relative_gap = std::abs(rc.fitted_rate - rc.predicted_rate) / std::abs(rc.predicted_rate);
  return rc;
}

TrajectoryLength trajectory_length(const std::vector<EnergyReport>& reports, const LojaFit& fit) {
  TrajectoryLength out;
  const EnergyReport* prev = nullptr;
  const EnergyReport* first = nullptr;
  for (const auto& r : reports) {
    if (r.t < fit.t_lo || r.t > fit.t_hi) continue;
    if (!first) first = &r;
    if (prev) out.length += 0.5 * (r.t - prev->t) * (std::sqrt(std::max(0.0, prev->dissipation)) +
                                                     std::sqrt(std::max(0.0, r.dissipation)));
    prev = &r;
  }
  if (first && first->F > fit.F_inf && fit.c > 0.0 && fit.theta < 1.0) {
    out.bound = std::pow(first->F - fit.F_inf, 1.0 - fit.theta) / (fit.c * (1.0 - fit.theta));
  }
  return out;
}

std::vector<EnergyReport> synthetic_trajectory(double theta, double c, double F_inf, std::span<const double> times,
                                               double z0) {
  if (!(theta >= 0.5 && theta < 1.0) || !(c > 0.0)) throw ConfigError("synthetic_trajectory: need theta in [1/2, 1), c > 0");
  std::vector<EnergyReport> out;
  out.reserve(times.size());
  for (double t : times) {
    double z;
    if (theta == 0.5) {
      z = z0 * std::exp(-c * c * t);
    } else {
      if (!(t > 0.0)) throw ConfigError("synthetic_trajectory: algebraic model needs t > 0");
      z = std::pow((2.0 * theta - 1.0) * c * c * t, -1.0 / (2.0 * theta - 1.0));
    }
    EnergyReport r;
    r.t = t;
    r.F = F_inf + z;
    r.dissipation = c * c * std::pow(z, 2.0 * theta);
    r.mass = 1.0;
    out.push_back(r);
  }
  return out;
}

std::vector<double> synthetic_distance(const std::vector<EnergyReport>& reports, double theta, double c,
                                       double F_inf) {
  std::vector<double> d;
  d.reserve(reports.size());
  for (const auto& r : reports) d.push_back(std::pow(r.F - F_inf, 1.0 - theta) / (c * (1.0 - theta)));
  return d;
}

}  // namespace mvgf
