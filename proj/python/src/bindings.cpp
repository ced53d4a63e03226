#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <sstream>
#include <vector>

#include "mvgf/app.hpp"
#include "mvgf/energy.hpp"
#include "mvgf/errors.hpp"
#include "mvgf/flow.hpp"
#include "mvgf/linearization.hpp"
#include "mvgf/metrics.hpp"
#include "mvgf/particles.hpp"
#include "mvgf/scenario.hpp"

namespace py = pybind11;
using namespace mvgf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Nodal values as (M,) in 1-D or (M, M) in 2-D, axis 0 = x.
Array to_numpy(const DensityField& rho) {
  const auto& g = rho.grid();
  std::vector<py::ssize_t> shape(g.dim(), g.points_per_axis());
  Array out(shape);
  std::memcpy(out.mutable_data(), rho.values().data(), g.size() * sizeof(double));
  return out;
}

DensityField from_numpy(const Array& a, bool normalize) {
  if (a.ndim() != 1 && a.ndim() != 2) throw ConfigError("density must be a 1-D or 2-D array");
  if (a.ndim() == 2 && a.shape(0) != a.shape(1)) throw ConfigError("2-D density must be square");
  const auto g = TorusGrid::create(static_cast<int>(a.ndim()), static_cast<int>(a.shape(0)));
  RealField f(g, 1, std::vector<double>(a.data(), a.data() + a.size()));
  return normalize ? DensityField::normalized(std::move(f)) : DensityField(std::move(f));
}

py::dict report_columns(const std::vector<EnergyReport>& reps) {
  const auto column = [&](double EnergyReport::*member) {
    Array a(std::vector<py::ssize_t>{static_cast<py::ssize_t>(reps.size())});
    double* out = a.mutable_data();
    for (const auto& r : reps) *out++ = r.*member;
    return a;
  };
  py::dict d;
  d["t"] = column(&EnergyReport::t);
  d["F"] = column(&EnergyReport::F);
  d["dissipation"] = column(&EnergyReport::dissipation);
  d["mass"] = column(&EnergyReport::mass);
  d["rho_min"] = column(&EnergyReport::rho_min);
  d["rho_max"] = column(&EnergyReport::rho_max);
  return d;
}

std::vector<EnergyReport> reports_from(const Array& t, const Array& F, const Array& I) {
  if (t.size() != F.size() || t.size() != I.size()) throw ConfigError("t, F and dissipation must have equal length");
  std::vector<EnergyReport> reps(t.size());
  for (py::ssize_t i = 0; i < t.size(); ++i) {
    reps[i].t = t.at(i);
    reps[i].F = F.at(i);
    reps[i].dissipation = I.at(i);
    reps[i].mass = 1.0;
  }
  return reps;
}

py::dict fit_dict(const LojaFit& f) {
  py::dict d;
  d["theta"] = f.theta;
  d["c"] = f.c;
  d["t_lo"] = f.t_lo;
  d["t_hi"] = f.t_hi;
  d["n_points"] = f.n_points;
  d["slope"] = f.slope;
  d["intercept"] = f.intercept;
  d["noise_floor"] = f.noise_floor;
  d["out_of_band"] = f.out_of_band;
  return d;
}

py::dict run_flow(const std::string& config_text) {
  const Scenario sc = parse_scenario(config_text);
  validate(sc);
  const Problem p = build_problem(sc);
  TrajectoryLog log;
  {
    py::gil_scoped_release release;
    log = run(p.rho0, p.V, p.mult, sc.flow);
  }
  py::dict d = report_columns(log.reports);
  d["status"] = std::string(to_string(log.status));
  d["t_final"] = log.t_final;
  d["steps"] = log.steps;
  d["failure"] = log.failure;
  d["final_state"] = to_numpy(log.final_state);
  return d;
}

py::dict stationary(const std::string& config_text) {
  const Scenario sc = parse_scenario(config_text);
  validate(sc);
  const Problem p = build_problem(sc);
  FixedPointOptions opts;
  opts.damping = sc.stationary.damping;
  opts.max_iter = sc.stationary.max_iter;
  opts.tol = sc.stationary.tol;
  const auto r = stationary_fixed_point(p.rho0, p.V, p.mult, opts);
  py::dict d;
  d["rho"] = to_numpy(r.rho);
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["residual"] = r.residual;
  return d;
}

py::dict spectrum(const std::string& config_text, const std::optional<Array>& base) {
  const Scenario sc = parse_scenario(config_text);
  validate(sc);
  const Problem p = build_problem(sc);
  const DensityField rho0 = base ? from_numpy(*base, true) : p.rho0;
  if (!(rho0.grid() == p.grid)) throw ConfigError("base state grid does not match the scenario grid");
  const HessianOperator op(rho0, p.V, p.mult);
  const auto rep = assemble_spectrum(op, sc.spectrum.max_mode, sc.spectrum.kernel_tol_rel);
  py::dict d;
  d["eigenvalues"] = rep.eigenvalues;
  d["kernel_dim"] = rep.kernel_dim;
  d["basis_size"] = rep.basis_size;
  d["asymmetry"] = rep.asymmetry;
  return d;
}

py::dict particles(const std::string& config_text, std::uint64_t seed) {
  const Scenario sc = parse_scenario(config_text);
  validate(sc);
  validate_particle_bands(sc);
  const Problem p = build_problem(sc);
  ParticleRun r;
  {
    py::gil_scoped_release release;
    const auto forces = ParticleForces::build(p.V, p.mult, sc.particles.smoothing_modes);
    const auto s0 = init_particles(sc.particles.n, sc.dim, seed, &p.rho0);
    r = run_particles(s0, forces, p.V, p.mult, sc.particles.run);
  }
  py::dict d = report_columns(r.reports);
  d["times"] = r.times;
  d["final_density"] = to_numpy(r.densities.back().base);
  const auto& pos = r.final_state.positions;
  Array x(std::vector<py::ssize_t>{static_cast<py::ssize_t>(pos.size() / sc.dim), sc.dim});
  std::memcpy(x.mutable_data(), pos.data(), pos.size() * sizeof(double));
  d["positions"] = x;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mvgf, m) {
  m.doc() = "Spectral Wasserstein gradient flows on the torus";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("normalize_config", [](const std::string& text) {
    const Scenario sc = parse_scenario(text);
    validate(sc);
    return serialize(sc);
  }, py::arg("config_text"), "Parse, validate and return the canonical form of a scenario.");

  m.def("cli", [](const std::string& subcommand, const std::string& config_path, std::optional<std::string> out,
                  std::optional<std::uint64_t> seed) {
    std::ostringstream so, se;
    const int code = main_entry(subcommand, config_path, out, seed, so, se);
    return py::make_tuple(code, so.str(), se.str());
  }, py::arg("subcommand"), py::arg("config_path"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
        "Run a CLI subcommand in-process; returns (exit_code, stdout, stderr).");

  m.def("run_flow", &run_flow, py::arg("config_text"));
  m.def("stationary", &stationary, py::arg("config_text"));
  m.def("spectrum", &spectrum, py::arg("config_text"), py::arg("base") = py::none());
  m.def("particles", &particles, py::arg("config_text"), py::arg("seed") = 0);

  m.def("free_energy", [](const Array& rho, const std::string& config_text) {
    const Scenario sc = parse_scenario(config_text);
    validate(sc);
    const Problem p = build_problem(sc);
    const auto r = energy_report(from_numpy(rho, false), p.V, p.mult, 0.0);
    return py::make_tuple(r.F, r.dissipation);
  }, py::arg("rho"), py::arg("config_text"), "(F, I) of a density under the scenario's potentials.");

  m.def("w2_circle", [](const Array& a, const Array& b, bool cells) {
    const auto mu = from_numpy(a, true), nu = from_numpy(b, true);
    return cells ? wasserstein2_circle_cells(mu, nu) : wasserstein2_circle(mu, nu);
  }, py::arg("mu"), py::arg("nu"), py::arg("cells") = true);
  m.def("tv_bound", [](const Array& a, const Array& b) {
    return tv_d2_bound(from_numpy(a, true), from_numpy(b, true));
  }, py::arg("mu"), py::arg("nu"));

  m.def("lojasiewicz_fit", [](const Array& t, const Array& F, const Array& I, std::optional<double> F_inf,
                              double r2_min, int min_points, double conv_tol) {
    LojaFitOptions opts;
    opts.F_inf = F_inf;
    opts.r2_min = r2_min;
    opts.min_points = min_points;
    opts.conv_tol = conv_tol;
    return fit_dict(lojasiewicz_fit(reports_from(t, F, I), opts));
  }, py::arg("t"), py::arg("F"), py::arg("dissipation"), py::arg("F_inf") = py::none(), py::arg("r2_min") = 0.98,
        py::arg("min_points") = 20, py::arg("conv_tol") = 1e-12);
}
