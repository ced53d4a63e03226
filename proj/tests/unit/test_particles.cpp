#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mvgf/particles.hpp"

using namespace mvgf;
using std::numbers::pi;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using W = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        W{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        W{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter stream statistics") {
  const CounterRng rng(12345);
  double s1 = 0, s2 = 0, s4 = 0, umin = 1, umax = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto u = rng.uniforms(i, 7);
    umin = std::min({umin, u[0], u[1]});
    umax = std::max({umax, u[0], u[1]});
    const auto z = rng.normals(i, 3);
    for (double x : z) {
      s1 += x;
      s2 += x * x;
      s4 += x * x * x * x;
    }
  }
  CHECK(umin > 0.0);
  CHECK(umax <= 1.0);
  CHECK(std::abs(s1 / (2 * n)) < 0.02);
  CHECK(s2 / (2 * n) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(s4 / (2 * n) == doctest::Approx(3.0).epsilon(0.05));
  CHECK(rng.uniforms(5, 9) == CounterRng(12345).uniforms(5, 9));
  CHECK(rng.uniforms(5, 9) != CounterRng(12346).uniforms(5, 9));
  CHECK(rng.uniforms(5, 9) != rng.uniforms(5, 10));
}

TEST_CASE("initial sampling follows the density") {
  const auto g = TorusGrid::create(1, 64);
  RealField f = RealField::scalar(g);
  for (std::size_t n = 0; n < g.size(); ++n) f.values[n] = 1.0 + 0.6 * std::cos(2 * pi * g.node(n)[0]);
  const DensityField rho(f);
  const auto s = init_particles(40000, 1, 99, &rho);
  double c = 0.0;
  for (double x : s.positions) {
    CHECK_MESSAGE((x >= 0.0 && x < 1.0), "position out of range");
    c += std::cos(2 * pi * x);
  }
  CHECK(c / 40000 == doctest::Approx(0.3).epsilon(0.06));
  CHECK(init_particles(40000, 1, 99, &rho) == s);
  CHECK_FALSE(init_particles(40000, 1, 100, &rho) == s);

  const auto g2 = TorusGrid::create(2, 16);
  RealField f2 = RealField::scalar(g2);
  for (std::size_t n = 0; n < g2.size(); ++n) {
    const auto x = g2.node(n);
    f2.values[n] = 1.0 + 0.5 * std::cos(2 * pi * x[1]);
  }
  const DensityField rho2(f2);
  const auto s2 = init_particles(20000, 2, 5, &rho2);
  double cy = 0.0, cx = 0.0;
  for (std::size_t i = 0; i < s2.size(); ++i) {
    cx += std::cos(2 * pi * s2.positions[2 * i]);
    cy += std::cos(2 * pi * s2.positions[2 * i + 1]);
  }
  CHECK(std::abs(cx / 20000) < 0.03);
  CHECK(cy / 20000 == doctest::Approx(0.25).epsilon(0.15));

  RealField spike = RealField::scalar(g2, 0.0);
  spike.values[0] = 256.0;
  const DensityField peaked(spike);
  CHECK_THROWS_AS(init_particles(10, 2, 1, &peaked), NumericalError);
}

TEST_CASE("pure diffusion has variance 2 T t per axis") {
  const auto g = TorusGrid::create(2, 16);
  const auto forces = ParticleForces::build(RealField::scalar(g), kernel_multiplier({}, g), 4);
  auto s0 = init_particles(20000, 2, 1);
  auto s = s0;
  const double dt = 1e-3, T = 0.5;
  for (int k = 0; k < 10; ++k) s = particle_step(s, forces, dt, T);
  double var = 0.0;
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    double d = s.positions[i] - s0.positions[i];
    d -= std::round(d);
    var += d * d;
  }
  var /= static_cast<double>(s.positions.size());
  CHECK(var == doctest::Approx(2 * T * 10 * dt).epsilon(0.03));
  CHECK(s.step == 10);
}

TEST_CASE("zero-temperature drift follows -grad V") {
  const auto g = TorusGrid::create(1, 16);
  const double a = 0.3, dt = 1e-3;
  const auto V = build_confinement(ConfinementSpec::cosine_sum({{{1, 0}, a}}), g).potential;
  const auto forces = ParticleForces::build(V, kernel_multiplier({}, g), 4);
  ParticleState s{1, {0.25, 0.75}, 0, 0};
  const auto next = particle_step(s, forces, dt, 0.0);
  CHECK(next.positions[0] == doctest::Approx(0.25 + 2 * pi * a * dt).epsilon(1e-12));
  CHECK(next.positions[1] == doctest::Approx(0.75 - 2 * pi * a * dt).epsilon(1e-12));
}

TEST_CASE("particle-mesh interaction: no self-force, momentum conserved, repulsion") {
  const auto g = TorusGrid::create(1, 32);
  const auto mult = kernel_multiplier(InteractionSpec::cosine_sum({{{1, 0}, 1.0}}), g);
  const auto forces = ParticleForces::build(RealField::scalar(g), mult, 8);
  CHECK(forces.interacting);

  ParticleState one{1, {0.3137}, 0, 0};
  CHECK(particle_step(one, forces, 1e-2, 0.0).positions[0] == doctest::Approx(0.3137).epsilon(1e-14));

  ParticleState two{1, {0.41, 0.57}, 0, 0};
  const auto next = particle_step(two, forces, 1e-2, 0.0);
  const double d0 = next.positions[0] - 0.41, d1 = next.positions[1] - 0.57;
  CHECK(std::abs(d0 + d1) < 1e-14);
  CHECK(d0 < 0.0);
  CHECK(d1 > 0.0);
  // Exact pair force (1/N) 2 pi a sin(2 pi r) with r = 0.16, up to mesh error.
  CHECK(-d0 / 1e-2 == doctest::Approx(0.5 * 2 * pi * std::sin(2 * pi * 0.16)).epsilon(0.05));
}

TEST_CASE("cloud-in-cell deposit and empirical density") {
  const auto g = TorusGrid::create(2, 16);
  const auto s = init_particles(5000, 2, 77);
  const auto rho = deposit_cic(s, g);
  CHECK(mean(rho.values) == doctest::Approx(1.0).epsilon(1e-12));
  const auto emp = empirical_density(s, g, 4);
  CHECK(emp.base.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(emp.base.min() >= 0.0);
  CHECK(emp.base.max() < 1.5);
  CHECK_THROWS_AS(empirical_density(s, g, 9), ConfigError);

  // Particles exactly on a single node with B = 0 give the uniform density.
  ParticleState pts{1, std::vector<double>(10, 0.25), 0, 0};
  const auto flat = empirical_density(pts, TorusGrid::create(1, 8), 0);
  for (double v : flat.base.values()) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("particle runs are reproducible and logged") {
  const auto g = TorusGrid::create(1, 32);
  const auto V = build_confinement(ConfinementSpec::cosine_sum({{{1, 0}, 1.0}}), g).potential;
  const auto mult = kernel_multiplier(InteractionSpec::cosine_sum({{{1, 0}, -1.0}}), g);
  const auto forces = ParticleForces::build(V, mult, 8);
  ParticleRunConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.05;
  cfg.log_every = 10;
  const auto s0 = init_particles(2000, 1, 42);
  const auto a = run_particles(s0, forces, V, mult, cfg);
  const auto b = run_particles(s0, forces, V, mult, cfg);
  CHECK(a.final_state == b.final_state);
  REQUIRE(a.times.size() == 6);
  CHECK(a.times.back() == doctest::Approx(0.05));
  for (const auto& r : a.reports) CHECK(r.mass == doctest::Approx(1.0).epsilon(1e-12));
  cfg.log_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
