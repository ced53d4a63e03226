#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvgf/flow.hpp"
#include "mvgf/scenario.hpp"

namespace mvgf {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

enum class Subcommand { run, stationary, spectrum, fit, particles, compare };
Subcommand parse_subcommand(const std::string& name);
const char* to_string(Subcommand c);

/// Discretized ingredients of a scenario.
struct Problem {
  TorusGrid grid;
  RealField V;
  KernelMultiplier mult;
  DensityField rho0;
};
Problem build_problem(const Scenario& sc);

struct Outcome {
  int exit_code = kExitOk;
  std::string summary;             // one-line JSON record
  std::vector<std::filesystem::path> files;
};

/// Executes one subcommand, writing artifacts under sc.out_dir. ConfigError
/// and NumericalError propagate; use `main_entry` for exit-code handling.
Outcome run_scenario(const Scenario& sc, Subcommand cmd);

/// Full CLI behaviour: loads the config, applies overrides, runs, prints the
/// summary to `out` and a JSON error record to `err` on failure.
int main_entry(const std::string& subcommand, const std::string& config_path,
               const std::optional<std::string>& out_dir, const std::optional<std::uint64_t>& seed,
               std::ostream& out, std::ostream& err);

/// One snapshot listed in a snapshot index CSV (path resolved).
struct SnapshotEntry {
  double t = 0.0;
  std::filesystem::path file;
};
std::vector<SnapshotEntry> read_snapshot_index(const std::filesystem::path& index_csv);

/// Energy rows of a trajectory CSV (comment lines skipped, extra columns ignored).
std::vector<EnergyReport> read_trajectory_csv(const std::filesystem::path& csv);

struct ComparisonRow {
  double t_a = 0.0, t_b = 0.0;
  double l1 = 0.0, linf = 0.0, tv_bound = 0.0, d2 = 0.0;  // d2 is NaN in 2-D
};

/// Pairs snapshots by nearest time (within `time_tol`) and computes distances.
std::vector<ComparisonRow> compare_snapshots(const std::vector<SnapshotEntry>& a, const std::vector<SnapshotEntry>& b,
                                             double time_tol);

}  // namespace mvgf
