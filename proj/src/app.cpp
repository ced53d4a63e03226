#include "mvgf/app.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mvgf/linearization.hpp"
#include "mvgf/metrics.hpp"
#include "mvgf/particles.hpp"
#include "mvgf/snapshot.hpp"

namespace mvgf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string provenance_header(const Scenario& sc) {
  std::string h = std::string("# mvgf ") + kVersion + "\n# scenario begin\n";
  std::istringstream in(serialize(sc));
  std::string line;
  while (std::getline(in, line)) h += "# " + line + "\n";
  return h + "# scenario end\n";
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path, const Scenario& sc, const std::string& columns) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write output file " + path.string());
  os << provenance_header(sc) << columns << "\n";
  return os;
}

void write_summary(std::ostream& os, const json& summary) { os << "# summary: " << summary.dump() << "\n"; }

// Writes snapshots and an index CSV next to them; returns the index path.
fs::path write_snapshot_series(const Scenario& sc, const fs::path& dir, const std::string& stem,
                               const std::vector<std::pair<double, DensityField>>& series) {
  const fs::path index = dir / (stem + ".csv");
  auto os = open_output(index, sc, "index,t,file");
  fs::create_directories(dir / stem);
  for (std::size_t i = 0; i < series.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%06zu.mvgf", i);
    const fs::path rel = fs::path(stem) / name;
    write_snapshot((dir / rel).string(), series[i].second.field());
    os << i << "," << real(series[i].first) << "," << rel.generic_string() << "\n";
  }
  return index;
}

DensityField load_density(const fs::path& path, const TorusGrid* expect) {
  RealField f = read_snapshot(path.string());
  if (!f.is_scalar()) throw ConfigError("snapshot " + path.string() + " is not a scalar field");
  if (expect && !(f.grid == *expect)) throw ConfigError("snapshot " + path.string() + " is on a different grid");
  for (double v : f.values) {
    if (v < -DensityField::kNegativeTolerance) throw ConfigError("snapshot " + path.string() + " has negative values");
  }
  return DensityField::normalized(std::move(f));
}

Outcome do_run(const Scenario& sc, const Problem& p) {
  const fs::path out = sc.out_dir;
  const auto log = run(p.rho0, p.V, p.mult, sc.flow);
  Outcome oc;

  const fs::path csv = out / "trajectory.csv";
  auto os = open_output(csv, sc, std::string(kEnergyCsvHeader) + ",source");
  for (const auto& r : log.reports) os << to_csv_row(r) << ",pde\n";
  const auto& last = log.reports.back();
  json summary = {{"subcommand", "run"},     {"status", to_string(log.status)}, {"t_final", log.t_final},
                  {"F_final", last.F},       {"I_final", last.dissipation},      {"steps", log.steps},
                  {"mass_final", last.mass}, {"rho_max_final", last.rho_max},   {"clipped_total", log.clipped_total}};
  if (!log.failure.empty()) summary["failure"] = log.failure;
  write_summary(os, summary);
  os.close();

  auto series = log.snapshots;
  if (series.empty() || series.front().first != 0.0) series.insert(series.begin(), {0.0, p.rho0});
  if (series.back().first != log.t_final) series.emplace_back(log.t_final, log.final_state);
  const auto index = write_snapshot_series(sc, out, "snapshots", series);
  write_snapshot((out / "final.mvgf").string(), log.final_state.field());

  oc.files = {csv, index, out / "final.mvgf"};
  oc.summary = summary.dump();
  oc.exit_code = log.status == TerminalStatus::step_failure ? kExitNumerical : kExitOk;
  return oc;
}

FixedPointResult solve_stationary(const Scenario& sc, const Problem& p) {
  FixedPointOptions opts;
  opts.damping = sc.stationary.damping;
  opts.max_iter = sc.stationary.max_iter;
  opts.tol = sc.stationary.tol;
  return stationary_fixed_point(p.rho0, p.V, p.mult, opts);
}

Outcome do_stationary(const Scenario& sc, const Problem& p) {
  const fs::path out = sc.out_dir;
  const auto res = solve_stationary(sc, p);
  const auto rep = energy_report(res.rho, p.V, p.mult, 0.0);
  fs::create_directories(out);
  write_snapshot((out / "stationary.mvgf").string(), res.rho.field());
  const fs::path csv = out / "stationary.csv";
  auto os = open_output(csv, sc, "iterations,converged,last_update,residual,F,dissipation,rho_min,rho_max");
  os << res.iterations << "," << (res.converged ? 1 : 0) << "," << real(res.last_update) << "," << real(res.residual)
     << "," << real(rep.F) << "," << real(rep.dissipation) << "," << real(rep.rho_min) << "," << real(rep.rho_max)
     << "\n";
  const json summary = {{"subcommand", "stationary"},
                        {"status", res.converged ? "converged" : "not_converged"},
                        {"iterations", res.iterations},
                        {"last_update", res.last_update},
                        {"residual", res.residual},
                        {"F", rep.F},
                        {"rho_max", rep.rho_max}};
  write_summary(os, summary);
  Outcome oc{res.converged ? kExitOk : kExitNumerical, summary.dump(), {out / "stationary.mvgf", csv}};
  return oc;
}

Outcome do_spectrum(const Scenario& sc, const Problem& p) {
  const fs::path out = sc.out_dir;
  DensityField base = p.rho0;
  if (sc.spectrum.base == SpectrumSetting::Base::stationary) {
    auto res = solve_stationary(sc, p);
    if (!res.converged) throw NumericalError("spectrum: stationary solve did not converge");
    base = std::move(res.rho);
  }
  const double base_I = dissipation(base, gradient_field(base, p.V, p.mult));
  const HessianOperator op(base, p.V, p.mult);
  const auto rep = assemble_spectrum(op, sc.spectrum.max_mode, sc.spectrum.kernel_tol_rel);

  const fs::path csv = out / "spectrum.csv";
  auto os = open_output(csv, sc, "index,eigenvalue");
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) os << i << "," << real(rep.eigenvalues[i]) << "\n";
  const json summary = {{"subcommand", "spectrum"},   {"basis_size", rep.basis_size},
                        {"kernel_dim", rep.kernel_dim}, {"kernel_tol", rep.kernel_tol},
                        {"min_eigenvalue", rep.eigenvalues.front()}, {"max_eigenvalue", rep.eigenvalues.back()},
                        {"asymmetry", rep.asymmetry}, {"base_dissipation", base_I}};
  write_summary(os, summary);
  return {kExitOk, summary.dump(), {csv}};
}

Outcome do_fit(const Scenario& sc, const Problem& p) {
  const fs::path out = sc.out_dir;
  const fs::path traj = sc.fit.trajectory.empty() ? out / "trajectory.csv" : fs::path(sc.fit.trajectory);
  if (!fs::exists(traj)) throw ConfigError("fit: trajectory CSV not found: " + traj.string());
  const auto reports = read_trajectory_csv(traj);

  LojaFitOptions opts;
  opts.r2_min = sc.fit.r2_min;
  opts.min_points = sc.fit.min_points;
  opts.F_inf = sc.fit.F_inf;
  opts.conv_tol = sc.flow.conv_tol;
  const auto fit = lojasiewicz_fit(reports, opts);
  const auto length = trajectory_length(reports, fit);

  const fs::path index = traj.parent_path() / "snapshots.csv";
  if (!fs::exists(index)) throw ConfigError("fit: snapshot index not found next to the trajectory: " + index.string());
  const auto snaps = read_snapshot_index(index);
  const DensityField terminal = load_density(snaps.back().file, &p.grid);
  std::vector<double> t, d;
  for (std::size_t i = 0; i + 1 < snaps.size(); ++i) {
    const auto rho = load_density(snaps[i].file, &p.grid);
    t.push_back(snaps[i].t);
    d.push_back(p.grid.dim() == 1 ? wasserstein2_circle_cells(rho, terminal) : tv_d2_bound(rho, terminal));
  }
  const auto rc = rate_check(fit, t, d);

  const fs::path csv = out / "fit.csv";
  auto os = open_output(csv, sc, "theta,c,window_lo,window_hi,r2,regime,fitted_rate,predicted_rate,relative_gap");
  os << real(fit.theta) << "," << real(fit.c) << "," << real(fit.t_lo) << "," << real(fit.t_hi) << "," << real(fit.r2)
     << "," << to_string(rc.regime) << "," << real(rc.fitted_rate) << "," << real(rc.predicted_rate) << ","
     << real(rc.relative_gap) << "\n";
  const json summary = {{"subcommand", "fit"},
                        {"theta", fit.theta},
                        {"c", fit.c},
                        {"r2", fit.r2},
                        {"n_points", fit.n_points},
                        {"F_inf", fit.F_inf},
                        {"window", {fit.t_lo, fit.t_hi}},
                        {"window_rule", "heuristic: longest suffix with r2 >= " + real(opts.r2_min)},
                        {"theta_out_of_band", fit.out_of_band},
                        {"theta_outside_unit_range", fit.outside_unit_range},
                        {"regime", to_string(rc.regime)},
                        {"fitted_rate", rc.fitted_rate},
                        {"predicted_rate", rc.predicted_rate},
                        {"relative_gap", rc.relative_gap},
                        {"distance", p.grid.dim() == 1 ? "d2" : "tv_bound"},
                        {"trajectory_length", length.length},
                        {"length_bound", length.bound}};
  write_summary(os, summary);
  return {kExitOk, summary.dump(), {csv}};
}

Outcome do_particles(const Scenario& sc, const Problem& p) {
  validate_particle_bands(sc);
  const fs::path out = sc.out_dir;
  const bool uniform = p.rho0.max() == p.rho0.min();
  const auto s0 = init_particles(sc.particles.n, p.grid.dim(), sc.seed, uniform ? nullptr : &p.rho0);
  const auto forces = ParticleForces::build(p.V, p.mult, sc.particles.smoothing_modes);
  const auto res = run_particles(s0, forces, p.V, p.mult, sc.particles.run);

  const fs::path csv = out / "particles.csv";
  auto os = open_output(csv, sc, std::string(kEnergyCsvHeader) + ",source");
  for (const auto& r : res.reports) os << to_csv_row(r) << ",particles\n";
  const auto& last = res.reports.back();
  const json summary = {{"subcommand", "particles"},
                        {"status", "t_end_reached"},
                        {"n_particles", sc.particles.n},
                        {"steps", res.final_state.step},
                        {"t_final", last.t},
                        {"F_final", last.F},
                        {"I_final", last.dissipation},
                        {"smoothing_modes", sc.particles.smoothing_modes},
                        {"bandwidth_modes", sc.particles.run.bandwidth_modes}};
  write_summary(os, summary);
  os.close();

  std::vector<std::pair<double, DensityField>> series;
  for (std::size_t i = 0; i < res.times.size(); ++i) series.emplace_back(res.times[i], res.densities[i].base);
  const auto index = write_snapshot_series(sc, out, "particle_snapshots", series);
  write_snapshot((out / "final_particles.mvgf").string(), res.densities.back().base.field());
  return {kExitOk, summary.dump(), {csv, index, out / "final_particles.mvgf"}};
}

fs::path resolve_index(const fs::path& p) {
  if (fs::is_directory(p)) {
    for (const char* name : {"snapshots.csv", "particle_snapshots.csv"}) {
      if (fs::exists(p / name)) return p / name;
    }
    throw ConfigError("compare: no snapshot index in directory " + p.string());
  }
  if (!fs::exists(p)) throw ConfigError("compare: input not found: " + p.string());
  return p;
}

Outcome do_compare(const Scenario& sc, const Problem& p) {
  const fs::path out = sc.out_dir;
  fs::path a, b;
  if (sc.compare.a.empty() && sc.compare.b.empty()) {
    Scenario pde = sc, part = sc;
    pde.out_dir = (out / "pde").string();
    part.out_dir = (out / "particles").string();
    const auto ra = do_run(pde, p);
    if (ra.exit_code != kExitOk) throw NumericalError("compare: PDE run failed: " + ra.summary);
    do_particles(part, p);
    a = out / "pde" / "snapshots.csv";
    b = out / "particles" / "particle_snapshots.csv";
  } else {
    if (sc.compare.a.empty() || sc.compare.b.empty()) throw ConfigError("compare needs both compare.a and compare.b");
    a = resolve_index(sc.compare.a);
    b = resolve_index(sc.compare.b);
  }
  const double tol = std::max(sc.flow.dt, sc.particles.run.dt);
  const auto rows = compare_snapshots(read_snapshot_index(a), read_snapshot_index(b), tol);

  const fs::path csv = out / "compare.csv";
  auto os = open_output(csv, sc, "t_a,t_b,l1,linf,tv_bound,d2");
  double max_l1 = 0.0, max_linf = 0.0, max_tv = 0.0, max_d2 = 0.0;
  for (const auto& r : rows) {
    os << real(r.t_a) << "," << real(r.t_b) << "," << real(r.l1) << "," << real(r.linf) << "," << real(r.tv_bound)
       << "," << real(r.d2) << "\n";
    max_l1 = std::max(max_l1, r.l1);
    max_linf = std::max(max_linf, r.linf);
    max_tv = std::max(max_tv, r.tv_bound);
    if (std::isfinite(r.d2)) max_d2 = std::max(max_d2, r.d2);
  }
  const auto& term = rows.back();
  json summary = {{"subcommand", "compare"},
                  {"pairs", rows.size()},
                  {"max_l1", max_l1},
                  {"max_linf", max_linf},
                  {"max_tv_bound", max_tv},
                  {"terminal_t", {term.t_a, term.t_b}},
                  {"terminal_l1", term.l1},
                  {"terminal_linf", term.linf},
                  {"terminal_tv_bound", term.tv_bound}};
  if (p.grid.dim() == 1) {
    summary["max_d2"] = max_d2;
    summary["terminal_d2"] = term.d2;
  }
  write_summary(os, summary);
  return {kExitOk, summary.dump(), {csv}};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

Subcommand parse_subcommand(const std::string& name) {
  for (auto c : {Subcommand::run, Subcommand::stationary, Subcommand::spectrum, Subcommand::fit, Subcommand::particles,
                 Subcommand::compare}) {
    if (name == to_string(c)) return c;
  }
  throw ConfigError("unknown subcommand '" + name + "' (expected run|stationary|spectrum|fit|particles|compare)");
}

const char* to_string(Subcommand c) {
  switch (c) {
    case Subcommand::run:
      return "run";
    case Subcommand::stationary:
      return "stationary";
    case Subcommand::spectrum:
      return "spectrum";
    case Subcommand::fit:
      return "fit";
    case Subcommand::particles:
      return "particles";
    case Subcommand::compare:
      return "compare";
  }
  return "?";
}

Problem build_problem(const Scenario& sc) {
  validate(sc);
  const auto grid = TorusGrid::create(sc.dim, sc.M);

  ConfinementSpec vspec;
  switch (sc.V.kind) {
    case ConfinementSpec::Kind::zero:
      break;
    case ConfinementSpec::Kind::cosine_sum:
      vspec = ConfinementSpec::cosine_sum(sc.V.modes);
      break;
    case ConfinementSpec::Kind::tabulated: {
      RealField table = read_snapshot(sc.V.path);
      if (!(table.grid == grid)) throw ConfigError("tabulated V in " + sc.V.path + " is on a different grid");
      vspec = ConfinementSpec::tabulated(std::move(table));
      break;
    }
  }
  RealField V = build_confinement(vspec, grid).potential;
  KernelMultiplier mult = kernel_multiplier(sc.W, grid);

  RealField init = RealField::scalar(grid, 1.0);
  switch (sc.initial.kind) {
    case InitialSetting::Kind::uniform_plus_modes: {
      auto v = init.channel(0);
      for (std::size_t n = 0; n < grid.size(); ++n) {
        const auto x = grid.node(n);
        for (const auto& m : sc.initial.modes) {
          v[n] += m.amplitude * std::cos(2.0 * std::numbers::pi * (m.k[0] * x[0] + m.k[1] * x[1]));
        }
      }
      break;
    }
    case InitialSetting::Kind::gibbs_of_V: {
      const auto v = V.channel(0);
      const double lo = *std::min_element(v.begin(), v.end());
      auto r = init.channel(0);
      for (std::size_t n = 0; n < grid.size(); ++n) r[n] = std::exp(-(v[n] - lo));
      break;
    }
    case InitialSetting::Kind::tabulated:
      init = read_snapshot(sc.initial.path);
      if (!(init.grid == grid) || !init.is_scalar()) {
        throw ConfigError("initial density in " + sc.initial.path + " does not match the grid");
      }
      break;
  }
  for (double x : init.values) {
    if (!std::isfinite(x) || x < -DensityField::kNegativeTolerance) {
      throw ConfigError("initial density must be finite and nonnegative");
    }
  }
  return {grid, std::move(V), std::move(mult), DensityField::normalized(std::move(init))};
}

Outcome run_scenario(const Scenario& sc, Subcommand cmd) {
  const Problem p = build_problem(sc);
  switch (cmd) {
    case Subcommand::run:
      return do_run(sc, p);
    case Subcommand::stationary:
      return do_stationary(sc, p);
    case Subcommand::spectrum:
      return do_spectrum(sc, p);
    case Subcommand::fit:
      return do_fit(sc, p);
    case Subcommand::particles:
      return do_particles(sc, p);
    case Subcommand::compare:
      return do_compare(sc, p);
  }
  throw ConfigError("unknown subcommand");
}

std::vector<SnapshotEntry> read_snapshot_index(const fs::path& index_csv) {
  std::ifstream in(index_csv);
  if (!in) throw ConfigError("cannot open snapshot index " + index_csv.string());
  std::vector<SnapshotEntry> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw ConfigError("malformed snapshot index row: " + line);
    out.push_back({std::stod(cells[1]), index_csv.parent_path() / cells[2]});
  }
  if (out.empty()) throw ConfigError("snapshot index " + index_csv.string() + " lists no snapshots");
  return out;
}

std::vector<EnergyReport> read_trajectory_csv(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open trajectory " + csv.string());
  std::vector<EnergyReport> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      if (line.rfind(kEnergyCsvHeader, 0) != 0) throw ConfigError("unexpected trajectory columns: " + line);
      header = false;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() < 9) throw ConfigError("short trajectory row: " + line);
    std::string row = cells[0];
    for (int i = 1; i < 9; ++i) row += "," + cells[i];
    out.push_back(parse_csv_row(row));
  }
  return out;
}

std::vector<ComparisonRow> compare_snapshots(const std::vector<SnapshotEntry>& a, const std::vector<SnapshotEntry>& b,
                                             double time_tol) {
  if (a.empty() || b.empty()) throw ConfigError("compare: empty snapshot series");
  std::vector<ComparisonRow> rows;
  auto distance_row = [&](const SnapshotEntry& x, const SnapshotEntry& y) {
    const auto ra = load_density(x.file, nullptr);
    const auto rb = load_density(y.file, nullptr);
    if (!(ra.grid() == rb.grid())) throw ConfigError("compare: runs use different grids");
    ComparisonRow r;
    r.t_a = x.t;
    r.t_b = y.t;
    r.l1 = l1_distance(ra, rb);
    r.linf = linf_distance(ra, rb);
    r.tv_bound = tv_d2_bound(ra, rb);
    r.d2 = ra.grid().dim() == 1 ? wasserstein2_circle_cells(ra, rb) : std::numeric_limits<double>::quiet_NaN();
    return r;
  };
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    const auto it = std::min_element(b.begin(), b.end(), [&](const SnapshotEntry& u, const SnapshotEntry& v) {
      return std::abs(u.t - a[i].t) < std::abs(v.t - a[i].t);
    });
    if (std::abs(it->t - a[i].t) <= time_tol && &*it != &b.back()) rows.push_back(distance_row(a[i], *it));
  }
  rows.push_back(distance_row(a.back(), b.back()));
  return rows;
}

int main_entry(const std::string& subcommand, const std::string& config_path, const std::optional<std::string>& out_dir,
               const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err) {
  auto error_record = [&](const char* kind, int code, const std::string& msg) {
    err << json{{"status", "error"}, {"kind", kind}, {"exit_code", code}, {"subcommand", subcommand}, {"message", msg}}
               .dump()
        << "\n";
    return code;
  };
  try {
    const auto cmd = parse_subcommand(subcommand);
    Scenario sc = load_scenario(config_path);
    if (out_dir) sc.out_dir = *out_dir;
    if (seed) sc.seed = *seed;
    const auto oc = run_scenario(sc, cmd);
    out << oc.summary << "\n";
    if (oc.exit_code != kExitOk) return error_record("numerical_failure", oc.exit_code, oc.summary);
    return kExitOk;
  } catch (const ConfigError& e) {
    return error_record("config_error", kExitConfig, e.what());
  } catch (const fs::filesystem_error& e) {
    return error_record("config_error", kExitConfig, e.what());
  } catch (const NumericalError& e) {
    return error_record("numerical_failure", kExitNumerical, e.what());
  } catch (const std::exception& e) {
    return error_record("numerical_failure", kExitNumerical, e.what());
  }
}

}  // namespace mvgf
