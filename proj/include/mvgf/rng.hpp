#pragma once

#include <array>
#include <cstdint>

namespace mvgf {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Each (key, counter) pair maps to four independent 32-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Deterministic stream of draws addressed by (seed, particle, step).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Two uniforms in (0, 1], 53-bit resolution.
  std::array<double, 2> uniforms(std::uint64_t particle, std::uint64_t step) const;
  /// Two standard normals by Box-Muller.
  std::array<double, 2> normals(std::uint64_t particle, std::uint64_t step) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

}  // namespace mvgf
