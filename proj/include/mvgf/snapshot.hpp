#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "mvgf/grid.hpp"

namespace mvgf {

/// Binary snapshot layout, all little-endian:
///   "MVGF" | u32 version (=1) | u32 dim | u32 M | u32 channels |
///   f64 values, channel-major, row-major node order.
inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(std::ostream& os, const RealField& field);
RealField read_snapshot(std::istream& is);

void write_snapshot(const std::string& path, const RealField& field);
RealField read_snapshot(const std::string& path);

}  // namespace mvgf
