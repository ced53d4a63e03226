#include "mvgf/rng.hpp"

#include <cmath>
#include <numbers>

namespace mvgf {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

std::array<double, 2> CounterRng::uniforms(std::uint64_t particle, std::uint64_t step) const {
  const auto w = philox4x32({static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(particle >> 32),
                             static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)},
                            key_);
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  auto to_unit = [&](std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits) + 1.0) * kScale;
  };
  return {to_unit(w[0], w[1]), to_unit(w[2], w[3])};
}

std::array<double, 2> CounterRng::normals(std::uint64_t particle, std::uint64_t step) const {
  const auto u = uniforms(particle, step);
  const double r = std::sqrt(-2.0 * std::log(u[0]));
  const double a = 2.0 * std::numbers::pi * u[1];
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace mvgf
