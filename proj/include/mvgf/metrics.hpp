#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvgf/energy.hpp"
#include "mvgf/flow.hpp"
#include "mvgf/grid.hpp"

namespace mvgf {

// ---- distances -------------------------------------------------------------

/// Exact quadratic Wasserstein distance on T^1 between the atomic measures
/// sum_i (mu_i / M) delta_{i/M} and likewise for nu. Uses lifted quantile
/// functions and minimizes the (convex) cost over the cut shift.
double wasserstein2_circle(const DensityField& mu, const DensityField& nu);

/// Squared version of the above, before the square root.
double wasserstein2_circle_squared(const DensityField& mu, const DensityField& nu);

/// Exact W2 on T^1 between the cell-wise constant densities (cell i is
/// [x_i - h/2, x_i + h/2]). Unlike the atomic version, which behaves like
/// h sqrt(TV) once the measures differ by less than a cell, this one tracks
/// the continuum distance for nearby states and is the one used for rates.
double wasserstein2_circle_cells(const DensityField& mu, const DensityField& nu);
double wasserstein2_circle_cells_squared(const DensityField& mu, const DensityField& nu);

/// |mu - nu|(T^n) = mean |mu - nu|.
double total_variation(const DensityField& mu, const DensityField& nu);
/// diam(T^n) * sqrt(TV) with diam = sqrt(n)/2.
double tv_d2_bound(const DensityField& mu, const DensityField& nu);

double l1_distance(const DensityField& mu, const DensityField& nu);
double l2_distance(const DensityField& mu, const DensityField& nu);
double linf_distance(const DensityField& mu, const DensityField& nu);

// ---- Lojasiewicz fit -------------------------------------------------------

struct LojaFit {
  double theta = 0.0;   // raw slope / 2, never clamped
  double c = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double F_inf = 0.0;
  double r2 = 0.0;
  int n_points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double noise_floor = 0.0;
  /// theta outside the sanity band [0.45, 1.05].
  bool out_of_band = false;
  /// theta outside [1/2, 1) (reporting flag only).
  bool outside_unit_range = false;
};

struct LojaFitOptions {
  double r2_min = 0.98;
  int min_points = 20;
  /// Limit energy; defaults to the terminal F. When set, the trajectory does
  /// not have to be converged.
  std::optional<double> F_inf;
  /// Energy noise floor; default 64 eps max(1, |F_inf|).
  std::optional<double> noise_floor;
  double conv_tol = 1e-12;
};

LojaFit lojasiewicz_fit(const std::vector<EnergyReport>& reports, const LojaFitOptions& opts = {});
LojaFit lojasiewicz_fit(const TrajectoryLog& log, const LojaFitOptions& opts = {});

// ---- rates -----------------------------------------------------------------

enum class RateRegime { exponential, algebraic };
const char* to_string(RateRegime r);

struct RateCheck {
  RateRegime regime = RateRegime::exponential;
  double fitted_rate = 0.0;
  double predicted_rate = 0.0;
  double relative_gap = 0.0;
  int n_points = 0;
};

/// theta <= 0.55 is treated as exponential.
inline constexpr double kExponentialThetaCutoff = 0.55;

/// exponential: c^2 / 2; algebraic: (1 - theta) / (2 theta - 1).
double predicted_rate(const LojaFit& fit);

/// Fits the distance-to-terminal series over the fit window. `times` and
/// `dist` are parallel; samples with dist <= dist_floor are ignored.
RateCheck rate_check(const LojaFit& fit, std::span<const double> times, std::span<const double> dist,
                     double dist_floor = 1e-12);

struct TrajectoryLength {
  double length = 0.0;  // trapezoid integral of sqrt(I) over the fit window
  double bound = 0.0;   // (F(t_lo) - F_inf)^(1 - theta) / (c (1 - theta))
  bool within(double slack) const { return length <= slack * bound + 1e-300; }
};

TrajectoryLength trajectory_length(const std::vector<EnergyReport>& reports, const LojaFit& fit);

// ---- synthetic model trajectories ----------------------------------------

/// Exact solution of z' = -c^2 z^(2 theta), sampled at `times`, offset by F_inf.
/// For theta > 1/2 the solution with z(0) = infinity is used:
///   z = ((2 theta - 1) c^2 t)^(-1 / (2 theta - 1)); for theta = 1/2, z = z0 e^{-c^2 t}.
std::vector<EnergyReport> synthetic_trajectory(double theta, double c, double F_inf, std::span<const double> times,
                                               double z0 = 1.0);
/// d2 model z^(1 - theta) / (c (1 - theta)) of a synthetic trajectory.
std::vector<double> synthetic_distance(const std::vector<EnergyReport>& reports, double theta, double c,
                                       double F_inf);

}  // namespace mvgf
