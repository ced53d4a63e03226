#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lp_transport.hpp"
#include "mvgf/metrics.hpp"

using namespace mvgf;
using std::numbers::pi;

namespace {

DensityField random_density(const TorusGrid& g, std::mt19937_64& gen, bool sparse = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealField f = RealField::scalar(g);
  for (auto& v : f.values) v = sparse && u(gen) < 0.5 ? 0.0 : u(gen);
  f.values[0] += 0.1;
  return DensityField::normalized(f);
}

std::vector<double> masses(const DensityField& d) {
  std::vector<double> m(d.values().begin(), d.values().end());
  for (auto& x : m) x /= static_cast<double>(m.size());
  return m;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
  return t;
}

}  // namespace

TEST_CASE("circle W2 agrees with an exact transport LP") {
  std::mt19937_64 gen(7);
  for (int M : {8, 16, 24}) {
    const auto g = TorusGrid::create(1, M);
    for (int trial = 0; trial < 6; ++trial) {
      const auto mu = random_density(g, gen, trial % 2 == 1);
      const auto nu = random_density(g, gen, trial % 3 == 2);
      const double lp = oracle::circle_w2_squared(masses(mu), masses(nu));
      CHECK(wasserstein2_circle_squared(mu, nu) == doctest::Approx(lp).epsilon(1e-9).scale(1e-12));
    }
  }
}

TEST_CASE("circle W2 of a translation is the shift length") {
  const auto g = TorusGrid::create(1, 32);
  std::mt19937_64 gen(3);
  const auto mu = random_density(g, gen);
  for (int j : {1, 5, 16, 20}) {
    RealField f = RealField::scalar(g);
    for (int i = 0; i < 32; ++i) f.values[(i + j) % 32] = mu.values()[i];
    const double s = std::min(j, 32 - j) / 32.0;
    // Translation is optimal on the circle for shifts of at most 1/2 only if it
    // beats every other coupling; it is always an upper bound.
    CHECK(wasserstein2_circle(mu, DensityField(f)) <= s + 1e-12);
  }
  // For a point mass the translation is optimal.
  RealField a = RealField::scalar(g), b = RealField::scalar(g);
  a.values[0] = 32.0;
  b.values[5] = 32.0;
  CHECK(wasserstein2_circle(DensityField(a), DensityField(b)) == doctest::Approx(5.0 / 32.0).epsilon(1e-12));
  b = RealField::scalar(g);
  b.values[20] = 32.0;
  CHECK(wasserstein2_circle(DensityField(a), DensityField(b)) == doctest::Approx(12.0 / 32.0).epsilon(1e-12));
}

TEST_CASE("circle W2 properties") {
  const auto g = TorusGrid::create(1, 16);
  std::mt19937_64 gen(11);
  const auto mu = random_density(g, gen), nu = random_density(g, gen);
  CHECK(wasserstein2_circle(mu, mu) < 1e-7);
  CHECK(wasserstein2_circle(mu, nu) == doctest::Approx(wasserstein2_circle(nu, mu)).epsilon(1e-10));
  CHECK(wasserstein2_circle(mu, nu) <= tv_d2_bound(mu, nu) + 1e-12);
  RealField heavy = mu.field();
  heavy.values[0] += 1.0;
  CHECK_THROWS_AS(wasserstein2_circle(DensityField(heavy), nu), ConfigError);
  CHECK_THROWS_AS(wasserstein2_circle(DensityField::uniform(TorusGrid::create(2, 8)),
                                      DensityField::uniform(TorusGrid::create(2, 8))),
                  ConfigError);
}

TEST_CASE("total variation and the diameter bound") {
  const auto g = TorusGrid::create(2, 8);
  RealField f = RealField::scalar(g, 1.0);
  for (std::size_t n = 0; n < g.size(); ++n) f.values[n] += (n % 2 ? 0.5 : -0.5);
  const DensityField mu(f), nu = DensityField::uniform(g);
  CHECK(total_variation(mu, nu) == doctest::Approx(0.5));
  CHECK(l1_distance(mu, nu) == doctest::Approx(0.5));
  CHECK(linf_distance(mu, nu) == doctest::Approx(0.5));
  CHECK(l2_distance(mu, nu) == doctest::Approx(0.5));
  CHECK(tv_d2_bound(mu, nu) == doctest::Approx(std::sqrt(2.0) / 2.0 * std::sqrt(0.5)));
}

TEST_CASE("Lojasiewicz fit recovers exponential synthetic data") {
  const auto times = linspace(0.0, 6.0, 601);
  const double c = 1.7, F_inf = -0.25;
  const auto reps = synthetic_trajectory(0.5, c, F_inf, times);
  LojaFitOptions opts;
  opts.F_inf = F_inf;
  const auto fit = lojasiewicz_fit(reps, opts);
  CHECK(fit.theta == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fit.c == doctest::Approx(c).epsilon(1e-9));
  CHECK(fit.r2 > 0.999999);
  CHECK_FALSE(fit.out_of_band);

  const auto d = synthetic_distance(reps, fit.theta, fit.c, F_inf);
  const auto rc = rate_check(fit, times, d);
  CHECK(rc.regime == RateRegime::exponential);
  CHECK(rc.fitted_rate == doctest::Approx(c * c / 2).epsilon(1e-8));
  CHECK(rc.relative_gap < 1e-8);

  const auto len = trajectory_length(reps, fit);
  CHECK(len.within(1.0 + 1e-4));
  CHECK(len.length == doctest::Approx(len.bound).epsilon(1e-3));
}

TEST_CASE("Lojasiewicz fit recovers algebraic synthetic data") {
  std::vector<double> times;
  for (int i = 0; i <= 400; ++i) times.push_back(std::pow(10.0, -1.0 + 5.0 * i / 400.0));
  const double theta = 0.75, c = 0.9;
  const auto reps = synthetic_trajectory(theta, c, 0.0, times);
  LojaFitOptions opts;
  opts.F_inf = 0.0;
  const auto fit = lojasiewicz_fit(reps, opts);
  CHECK(fit.theta == doctest::Approx(theta).epsilon(1e-9));
  CHECK(fit.c == doctest::Approx(c).epsilon(1e-8));
  const auto rc = rate_check(fit, times, synthetic_distance(reps, theta, c, 0.0));
  CHECK(rc.regime == RateRegime::algebraic);
  CHECK(rc.predicted_rate == doctest::Approx(0.5));
  CHECK(rc.relative_gap < 1e-8);
  CHECK(trajectory_length(reps, fit).within(1.0));
}

TEST_CASE("fit picks the asymptotic window") {
  // Transient with the wrong exponent followed by a clean exponential tail.
  const auto times = linspace(0.0, 8.0, 801);
  std::vector<EnergyReport> reps;
  for (double t : times) {
    EnergyReport r;
    r.t = t;
    const double z = std::exp(-2.0 * t) + (t < 1.0 ? 0.3 * (1.0 - t) * (1.0 - t) : 0.0);
    r.F = 1.0 + z;
    r.dissipation = t < 1.0 ? 5.0 * z * z * z : 2.0 * z;
    reps.push_back(r);
  }
  reps.back().dissipation = 0.0;
  reps.back().F = 1.0;
  LojaFitOptions opts;
  opts.r2_min = 0.99999;
  const auto fit = lojasiewicz_fit(reps, opts);
  CHECK(fit.t_lo >= 1.0);
  CHECK(fit.theta == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fit.F_inf == 1.0);
}

TEST_CASE("fit error paths") {
  const auto times = linspace(0.0, 1.0, 50);
  auto reps = synthetic_trajectory(0.5, 1.0, 0.0, times);
  CHECK_THROWS_AS(lojasiewicz_fit(reps), NumericalError);  // not converged
  LojaFitOptions opts;
  opts.F_inf = 0.0;
  opts.min_points = 100;
  CHECK_THROWS_AS(lojasiewicz_fit(reps, opts), NumericalError);
  opts.min_points = 2;
  CHECK_THROWS_AS(lojasiewicz_fit(reps, opts), ConfigError);
  CHECK_THROWS_AS(lojasiewicz_fit(std::vector<EnergyReport>{}), NumericalError);
  CHECK_THROWS_AS(synthetic_trajectory(0.3, 1.0, 0.0, times), ConfigError);
}

TEST_CASE("out-of-band exponents are flagged, not clamped") {
  const auto times = linspace(0.0, 4.0, 200);
  std::vector<EnergyReport> reps;
  for (double t : times) {
    EnergyReport r;
    r.t = t;
    r.F = std::exp(-t);
    r.dissipation = std::pow(r.F, 2.4);  // theta = 1.2
    reps.push_back(r);
  }
  LojaFitOptions opts;
  opts.F_inf = 0.0;
  const auto fit = lojasiewicz_fit(reps, opts);
  CHECK(fit.theta == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(fit.out_of_band);
  CHECK(fit.outside_unit_range);
}

TEST_CASE("narrow bumps 0.3 apart") {
  const auto g = TorusGrid::create(1, 128);
  auto bump = [&](double c) {
    RealField f = RealField::scalar(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
      double d = g.node(n)[0] - c;
      d -= std::round(d);
      f.values[n] = std::exp(-0.5 * d * d / (0.02 * 0.02));
    }
    return DensityField::normalized(f);
  };
  const auto mu = bump(0.2), nu = bump(0.5);
  const double d = wasserstein2_circle(mu, nu);
  CHECK(d == doctest::Approx(0.3).epsilon(0.005 / 0.3));
  CHECK(d * d == doctest::Approx(oracle::circle_w2_squared(masses(mu), masses(nu))).epsilon(1e-8));
}

TEST_CASE("TV of a cosine perturbation") {
  const auto g = TorusGrid::create(1, 256);
  const double eps = 0.2;
  RealField f = RealField::scalar(g);
  for (std::size_t n = 0; n < g.size(); ++n) f.values[n] = 1.0 + eps * std::cos(2 * pi * g.node(n)[0]);
  const DensityField nu(f), mu = DensityField::uniform(g);
  // Node sums of |cos| converge at O(h^2) because of the kinks.
  CHECK(total_variation(mu, nu) == doctest::Approx(eps * 2 / pi).epsilon(1e-4));
  CHECK(tv_d2_bound(mu, nu) == doctest::Approx(0.5 * std::sqrt(eps * 2 / pi)).epsilon(1e-4));
}

TEST_CASE("flat trajectory has too few points") {
  std::vector<EnergyReport> reps(50);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    reps[i].t = 0.1 * i;
    reps[i].F = -0.5;
    reps[i].dissipation = 0.0;
  }
  CHECK_THROWS_WITH_AS(lojasiewicz_fit(reps), doctest::Contains("too few points"), NumericalError);
  LojaFit fit;
  fit.F_inf = -0.5;
  fit.c = 1.0;
  fit.theta = 0.5;
  fit.t_hi = 5.0;
  const auto len = trajectory_length(reps, fit);
  CHECK(len.length == 0.0);
  CHECK(len.bound == 0.0);
}

TEST_CASE("W2 triangle inequality on random triples") {
  const auto g = TorusGrid::create(1, 32);
  std::mt19937_64 gen(21);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_density(g, gen), b = random_density(g, gen), c = random_density(g, gen, true);
    CHECK(wasserstein2_circle(a, c) <= wasserstein2_circle(a, b) + wasserstein2_circle(b, c) + 1e-12);
  }
}

TEST_CASE("cell-wise W2: single cells, refinement oracle and linear response") {
  const auto g = TorusGrid::create(1, 16);
  RealField a = RealField::scalar(g), b = RealField::scalar(g);
  a.values[2] = 16.0;
  b.values[5] = 16.0;
  CHECK(wasserstein2_circle_cells(DensityField(a), DensityField(b)) == doctest::Approx(3.0 / 16.0).epsilon(1e-12));

  // Each cell split into R equal atoms: the atomic LP converges to the cell metric at rate h / R.
  std::mt19937_64 gen(8);
  const int R = 8;
  for (int trial = 0; trial < 4; ++trial) {
    const auto mu = random_density(g, gen, trial % 2 == 1), nu = random_density(g, gen);
    std::vector<double> fm, fn;
    for (int i = 0; i < 16; ++i) {
      for (int r = 0; r < R; ++r) {
        fm.push_back(mu.values()[i] / (16.0 * R));
        fn.push_back(nu.values()[i] / (16.0 * R));
      }
    }
    // The oracle places sub-atoms at x_i + r h / R, a common rotation of both measures.
    const double lp = std::sqrt(oracle::circle_w2_squared(fm, fn));
    const double d = wasserstein2_circle_cells(mu, nu);
    CHECK(std::abs(d - lp) <= 1.0 / (16.0 * R));
    CHECK(d <= tv_d2_bound(mu, nu) + 1e-12);
  }

  // Small perturbations: W2 ~ |eps cos|_{H^-1} = eps / (2 pi sqrt 2).
  const auto g2 = TorusGrid::create(1, 256);
  const double eps = 1e-4;
  RealField f = RealField::scalar(g2);
  for (std::size_t n = 0; n < g2.size(); ++n) f.values[n] = 1.0 + eps * std::cos(2 * pi * g2.node(n)[0]);
  const double d = wasserstein2_circle_cells(DensityField(f), DensityField::uniform(g2));
  CHECK(d == doctest::Approx(eps / (2 * pi * std::sqrt(2.0))).epsilon(1e-3));
  // The atomic metric does not see this scale.
  CHECK(wasserstein2_circle(DensityField(f), DensityField::uniform(g2)) > 5 * d);
}
