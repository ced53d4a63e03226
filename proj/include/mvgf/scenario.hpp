#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvgf/flow.hpp"
#include "mvgf/particles.hpp"
#include "mvgf/potentials.hpp"

namespace mvgf {

/// Confinement as written in a scenario file; tabulated tables are loaded
/// from `path` (an MVGF snapshot) at run time.
struct VSetting {
  ConfinementSpec::Kind kind = ConfinementSpec::Kind::zero;
  std::vector<CosineMode> modes;
  std::string path;
  bool operator==(const VSetting&) const = default;
};

struct InitialSetting {
  enum class Kind { uniform_plus_modes, tabulated, gibbs_of_V };
  Kind kind = Kind::uniform_plus_modes;
  /// rho0 = 1 + sum_k a_k cos(2 pi k.x), normalized.
  std::vector<CosineMode> modes;
  std::string path;
  bool operator==(const InitialSetting&) const = default;
};

struct StationarySetting {
  double damping = 1.0;
  int max_iter = 10000;
  double tol = 1e-13;
  bool operator==(const StationarySetting&) const = default;
};

struct SpectrumSetting {
  enum class Base { initial, stationary };
  int max_mode = 3;
  double kernel_tol_rel = 1e-7;
  Base base = Base::initial;
  bool operator==(const SpectrumSetting&) const = default;
};

struct ParticleSetting {
  std::size_t n = 10000;
  int smoothing_modes = 16;
  ParticleRunConfig run;
  bool operator==(const ParticleSetting&) const = default;
};

struct FitSetting {
  double r2_min = 0.98;
  int min_points = 20;
  std::optional<double> F_inf;
  /// CSV consumed by `fit`; empty means <out>/trajectory.csv.
  std::string trajectory;
  bool operator==(const FitSetting&) const = default;
};

struct CompareSetting {
  /// Run directories; when both are empty, `compare` produces them itself
  /// (PDE run and particle run of this scenario).
  std::string a;
  std::string b;
  bool operator==(const CompareSetting&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  int dim = 1;
  int M = 64;
  VSetting V;
  InteractionSpec W;
  InitialSetting initial;
  FlowConfig flow;
  StationarySetting stationary;
  SpectrumSetting spectrum;
  ParticleSetting particles;
  FitSetting fit;
  CompareSetting compare;
  std::string out_dir = "out";

  bool operator==(const Scenario&) const = default;
};

/// Key = value grammar with [section] headers; `#` starts a comment. Keys may
/// also be written fully qualified (`W.chi = 10`). Unknown keys, duplicate
/// keys and malformed values are ConfigErrors carrying the line number.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Canonical text form; parse_scenario(serialize(s)) == s.
std::string serialize(const Scenario& s);

/// Cross-field checks (grid sizes, kernel assumptions, representable modes).
void validate(const Scenario& s);

/// Particle mesh bands against M; checked only by the particle subcommands so
/// that small PDE-only grids do not trip over the particle defaults.
void validate_particle_bands(const Scenario& s);

}  // namespace mvgf
