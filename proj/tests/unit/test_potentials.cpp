#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "finite_difference.hpp"
#include "mvgf/potentials.hpp"
#include "quadrature.hpp"

using namespace mvgf;
using std::numbers::pi;

TEST_CASE("newtonian multiplier is -chi / (4 pi^2 |k|^2) with zero mean") {
  const auto g = TorusGrid::create(2, 16);
  const auto m = kernel_multiplier(InteractionSpec::newtonian(10.0), g);
  CHECK(m.at({0, 0}) == 0.0);
  CHECK(m.at({1, 0}) == doctest::Approx(-10.0 / (4 * pi * pi)));
  CHECK(m.at({1, -2}) == doctest::Approx(-10.0 / (4 * pi * pi * 5)));
}

TEST_CASE("Keller-Segel convolution solves the Poisson equation") {
  // W * rho = chi G * rho with lap(G * rho) = rho - mean(rho).
  const auto g = TorusGrid::create(2, 32);
  RealField rho = RealField::scalar(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto x = g.node(n);
    rho.values[n] = 1.0 + 0.3 * std::cos(2 * pi * x[0]) + 0.2 * std::sin(2 * pi * (x[0] + 2 * x[1]));
  }
  const double chi = 7.0;
  const auto c = convolve(kernel_multiplier(InteractionSpec::newtonian(chi), g), rho);
  const auto lap = divergence(gradient(c));
  for (std::size_t n = 0; n < g.size(); ++n) CHECK(lap.values[n] == doctest::Approx(chi * (rho.values[n] - 1.0)).epsilon(1e-10));
}

TEST_CASE("yukawa multiplier and its alpha requirement") {
  const auto g = TorusGrid::create(1, 16);
  const auto m = kernel_multiplier(InteractionSpec::yukawa(5.0, 2.0), g);
  CHECK(m.at({0, 0}) == doctest::Approx(-2.5));
  CHECK(m.at({3, 0}) == doctest::Approx(-5.0 / (36 * pi * pi + 2.0)));
  CHECK_THROWS_WITH_AS(kernel_multiplier(InteractionSpec::yukawa(5.0, -1.0), g), doctest::Contains("alpha > 0"),
                       ConfigError);
  CHECK_THROWS_AS(kernel_multiplier(InteractionSpec::yukawa(5.0, 0.0), g), ConfigError);
}

TEST_CASE("cosine-sum kernel splits amplitude over +k and -k") {
  const auto g = TorusGrid::create(2, 16);
  const auto m = kernel_multiplier(InteractionSpec::cosine_sum({{{1, 2}, 0.8}, {{0, 0}, 0.1}}), g);
  CHECK(m.at({1, 2}) == doctest::Approx(0.4));
  CHECK(m.at({-1, -2}) == doctest::Approx(0.4));
  CHECK(m.at({0, 0}) == doctest::Approx(0.1));
  // Convolution of cos against rho reproduces int W(x - y) rho(y) dy.
  RealField rho = RealField::scalar(g);
  for (std::size_t n = 0; n < g.size(); ++n) rho.values[n] = 1.0 + 0.5 * std::cos(2 * pi * (g.node(n)[0] + 2 * g.node(n)[1]));
  const auto c = convolve(m, rho);
  for (std::size_t n = 0; n < g.size(); n += 11) {
    const auto x = g.node(n);
    CHECK(c.values[n] == doctest::Approx(0.1 + 0.8 * 0.25 * std::cos(2 * pi * (x[0] + 2 * x[1]))).epsilon(1e-12));
  }
}

TEST_CASE("fourier multiplier must be even") {
  const auto g = TorusGrid::create(1, 16);
  const auto ok = kernel_multiplier(InteractionSpec::fourier_multiplier({{{2, 0}, -0.5}}), g);
  CHECK(ok.at({-2, 0}) == -0.5);
  CHECK_THROWS_WITH(kernel_multiplier(InteractionSpec::fourier_multiplier({{{2, 0}, -0.5}, {{-2, 0}, 0.3}}), g),
                    doctest::Contains("A2"));
}

TEST_CASE("radial power growth bound") {
  CHECK_THROWS_WITH(InteractionSpec::radial_power({{1.0, -1.5}}).validate(1), doctest::Contains("A3"));
  CHECK_NOTHROW(InteractionSpec::radial_power({{1.0, 1.0}}).validate(1));
  CHECK_NOTHROW(InteractionSpec::radial_power({{1.0, 0.5}}).validate(2));
}

TEST_CASE("radial power multiplier matches quadrature Fourier coefficients") {
  // W(x) = |x|_T^2 on T^1: W^(k) = int_0^1 d(x)^2 cos(2 pi k x) dx.
  const auto g = TorusGrid::create(1, 256);
  const auto m = kernel_multiplier(InteractionSpec::radial_power({{1.0, 2.0}}), g);
  for (int k : {0, 1, 2, 5}) {
    const double exact = oracle::integrate(
        [&](double x) {
          const double d = std::min(x, 1.0 - x);
          return d * d * std::cos(2 * pi * k * x);
        },
        0.0, 1.0, 128, 16);
    CHECK(m.at({k, 0}) == doctest::Approx(exact).epsilon(1e-3));
  }
}

TEST_CASE("cell-average treatment of a singular radial profile") {
  // gamma = -0.5 on T^1: the origin cell average equals (h/2)^gamma/(gamma+1).
  const auto g = TorusGrid::create(1, 64);
  const auto w = sample_radial_kernel({{1.0, -0.5}}, g);
  CHECK(w.values[0] == doctest::Approx(std::pow(0.5 / 64, -0.5) / 0.5));
  CHECK(w.values[3] == doctest::Approx(std::pow(3.0 / 64, -0.5)));
}

TEST_CASE("confinement gradient matches analytic and finite differences") {
  const auto g = TorusGrid::create(2, 32);
  const auto fields = build_confinement(ConfinementSpec::cosine_sum({{{1, 0}, 1.0}, {{1, 1}, -0.4}}), g);
  auto V = [](double x, double y) { return std::cos(2 * pi * x) - 0.4 * std::cos(2 * pi * (x + y)); };
  for (std::size_t n = 0; n < g.size(); n += 37) {
    const auto x = g.node(n);
    CHECK(fields.potential.values[n] == doctest::Approx(V(x[0], x[1])));
    const double gx = oracle::derivative([&](double s) { return V(s, x[1]); }, x[0]);
    const double gy = oracle::derivative([&](double s) { return V(x[0], s); }, x[1]);
    CHECK(fields.gradient.channel(0)[n] == doctest::Approx(gx).epsilon(1e-9));
    CHECK(fields.gradient.channel(1)[n] == doctest::Approx(gy).epsilon(1e-9));
  }
}

TEST_CASE("tabulated confinement: grid check and O(h^2) finite differences") {
  const auto g = TorusGrid::create(1, 64);
  RealField t = RealField::scalar(g);
  auto f = [](double x) { return std::exp(0.5 * std::sin(2 * pi * x)); };
  for (std::size_t n = 0; n < g.size(); ++n) t.values[n] = f(g.node(n)[0]);
  const auto fields = build_confinement(ConfinementSpec::tabulated(t), g);
  const double h = g.spacing();
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double fd = (t.values[(n + 1) % 64] - t.values[(n + 63) % 64]) / (2 * h);
    CHECK(std::abs(fields.gradient.values[n] - fd) < 5.0 * h * h * 100);
  }
  CHECK_THROWS_AS(build_confinement(ConfinementSpec::tabulated(t), TorusGrid::create(1, 32)), ConfigError);
}

TEST_CASE("modes beyond the grid band are rejected") {
  const auto g = TorusGrid::create(1, 16);
  CHECK_THROWS_AS(build_confinement(ConfinementSpec::cosine_sum({{{8, 0}, 1.0}}), g), ConfigError);
  CHECK_THROWS_AS(kernel_multiplier(InteractionSpec::cosine_sum({{{0, 1}, 1.0}}), g), ConfigError);
}

TEST_CASE("gridded grad kernel truncation and oddness") {
  const auto g = TorusGrid::create(2, 16);
  const auto mult = kernel_multiplier(InteractionSpec::yukawa(3.0, 1.0), g);
  const auto t = gridded_grad_kernel(mult, 4);
  const auto spec = forward_transform(t);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto k = g.wavevector(n);
    if (std::max(std::abs(k[0]), std::abs(k[1])) > 4) {
      CHECK(std::abs(spec.channel(0)[n]) < 1e-14);
    }
    CHECK(t.channel(0)[n] == doctest::Approx(-t.channel(0)[g.negated_index(n)]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gridded_grad_kernel(mult, 9), ConfigError);
}

TEST_CASE("torus distance") {
  const double a[2] = {0.9, 0.3};
  CHECK(torus_distance(std::span<const double>(a, 1)) == doctest::Approx(0.1));
  CHECK(torus_distance(std::span<const double>(a, 2)) == doctest::Approx(std::hypot(0.1, 0.3)));
}
