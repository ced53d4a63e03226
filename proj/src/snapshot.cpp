#include "mvgf/snapshot.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <algorithm>
#include <cstring>
#include <fstream>

namespace mvgf {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

void put_u32(std::ostream& os, std::uint32_t v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ConfigError("truncated snapshot header");
  return to_little(v);
}

}  // namespace

void write_snapshot(std::ostream& os, const RealField& field) {
  os.write("MVGF", 4);
  put_u32(os, kSnapshotVersion);
  put_u32(os, static_cast<std::uint32_t>(field.grid.dim()));
  put_u32(os, static_cast<std::uint32_t>(field.grid.points_per_axis()));
  put_u32(os, static_cast<std::uint32_t>(field.channels));
  for (double v : field.values) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!os) throw NumericalError("failed to write snapshot");
}

RealField read_snapshot(std::istream& is) {
  char magic[4] = {};
  if (!is.read(magic, 4) || std::memcmp(magic, "MVGF", 4) != 0) {
    throw ConfigError("not an MVGF snapshot (bad magic)");
  }
  const auto version = get_u32(is);
  if (version != kSnapshotVersion) {
    throw ConfigError("unsupported snapshot version " + std::to_string(version));
  }
  const auto dim = static_cast<int>(get_u32(is));
  const auto m = static_cast<int>(get_u32(is));
  const auto channels = static_cast<int>(get_u32(is));
  const auto grid = TorusGrid::create(dim, m);
  if (channels != 1 && channels != dim) throw ConfigError("snapshot has invalid channel count");
  std::vector<double> values(grid.size() * channels);
  for (auto& v : values) {
    std::uint64_t bits = 0;
    if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw ConfigError("truncated snapshot data");
    v = std::bit_cast<double>(to_little(bits));
  }
  return RealField(grid, channels, std::move(values));
}

void write_snapshot(const std::string& path, const RealField& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open snapshot for writing: " + path);
  write_snapshot(os, field);
}

RealField read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open snapshot: " + path);
  return read_snapshot(is);
}

}  // namespace mvgf
