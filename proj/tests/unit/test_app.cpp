#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "mvgf/app.hpp"

using namespace mvgf;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"(name = "fp-small"   # Fokker-Planck in a cosine well
seed = 3

[grid]
dim = 1
M = 32

[V]
kind = cosine_sum
modes = [((1, 0), 1.0)]

[W]
kind = cosine_sum
modes = [((1), -0.5)]

[initial]
kind = uniform_plus_modes
modes = [((2, 0), 0.4)]

[flow]
dt = 1e-3
t_end = 8.0
conv_tol = 1e-14
snapshot_every = 50

[particles]
n = 2000
smoothing_modes = 8
bandwidth_modes = 6
dt = 1e-3
t_end = 0.1
log_every = 20

[fit]
min_points = 20
)";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mvgf_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "scenario.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string error_message_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int invoke(const std::string& cmd, const fs::path& cfg, const fs::path& out, std::string* err_text = nullptr,
           std::optional<std::uint64_t> seed = std::nullopt) {
  std::ostringstream o, e;
  const int code = main_entry(cmd, cfg.string(), out.string(), seed, o, e);
  if (err_text) *err_text = e.str();
  return code;
}

}  // namespace

TEST_CASE("scenario parsing and canonical round trip") {
  const auto sc = parse_scenario(kConfig);
  CHECK(sc.name == "fp-small");
  CHECK(sc.M == 32);
  REQUIRE(sc.V.modes.size() == 1);
  CHECK(sc.V.modes[0].amplitude == 1.0);
  CHECK(sc.W.kind == InteractionSpec::Kind::cosine_sum);
  CHECK(sc.W.modes[0].k == Wavevector{1, 0});
  CHECK(sc.flow.conv_tol == 1e-14);
  CHECK(sc.particles.run.bandwidth_modes == 6);
  CHECK(parse_scenario(serialize(sc)) == sc);

  const auto dotted = parse_scenario("grid.M = 16\nW.kind = yukawa_green\nW.chi = 2\nW.alpha = 0.5\n");
  CHECK(dotted.M == 16);
  CHECK(dotted.W.alpha == 0.5);
  CHECK(parse_scenario(serialize(dotted)) == dotted);

  const auto radial = parse_scenario("[W]\nkind = radial_power\nterms = [(1.0, 2.0), (-0.5, 1.5)]\n");
  CHECK(radial.W.terms.size() == 2);
  CHECK(parse_scenario(serialize(radial)) == radial);
}

TEST_CASE("scenario errors carry line numbers") {
  CHECK(error_message_of("[grid]\nM = 32\nbogus = 1\n").find("line 3") != std::string::npos);
  CHECK(error_message_of("[nope]\n").find("line 1") != std::string::npos);
  CHECK(error_message_of("[grid]\nM = 32\nM = 16\n").find("duplicate") != std::string::npos);
  CHECK(error_message_of("[flow]\ndt = fast\n").find("line 2") != std::string::npos);
  CHECK(error_message_of("[grid]\nM = 33\n") != "");
  CHECK(error_message_of("[W]\nkind = yukawa_green\nchi = 1\nalpha = 0\n") != "");
  CHECK(error_message_of("[V]\nkind = cosine_sum\nmodes = [((40, 0), 1.0)]\n") != "");
  CHECK(error_message_of("[flow]\ndt = -1\n") != "");
  CHECK(error_message_of("[grid]\nM = 32\n") == "");
  // Particle bands are only enforced by the particle subcommands.
  const auto small = parse_scenario("[grid]\nM = 8\n");
  CHECK_THROWS_AS(validate_particle_bands(small), ConfigError);
}

TEST_CASE("CLI run, fit, stationary, spectrum and exit codes") {
  TempDir tmp("cli");
  const auto cfg = write_config(tmp.path, kConfig);
  const auto out = tmp.path / "out";

  REQUIRE(invoke("run", cfg, out) == kExitOk);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "snapshots.csv"));
  CHECK(fs::exists(out / "final.mvgf"));
  {
    std::ifstream in(out / "trajectory.csv");
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("# mvgf", 0) == 0);
  }
  const auto traj = read_trajectory_csv(out / "trajectory.csv");
  REQUIRE(traj.size() > 100);
  CHECK(traj.front().t == 0.0);
  CHECK(traj.back().dissipation < 1e-14);

  REQUIRE(invoke("fit", cfg, out) == kExitOk);
  CHECK(fs::exists(out / "fit.csv"));

  REQUIRE(invoke("stationary", cfg, out) == kExitOk);
  CHECK(fs::exists(out / "stationary.mvgf"));
  REQUIRE(invoke("spectrum", cfg, out) == kExitOk);
  CHECK(fs::exists(out / "spectrum.csv"));

  std::string err;
  CHECK(invoke("walk", cfg, out, &err) == kExitConfig);
  CHECK(invoke("run", tmp.path / "missing.cfg", out, &err) == kExitConfig);
  const auto rec = nlohmann::json::parse(err);
  CHECK(rec["status"] == "error");
  CHECK(rec["kind"] == "config_error");
  CHECK(rec["exit_code"] == 2);

  const auto bad = write_config(tmp.path, std::string(kConfig) + "\n[stationary]\nmax_iter = 2\n");
  CHECK(invoke("stationary", bad, out, &err) == kExitNumerical);
  CHECK(nlohmann::json::parse(err)["kind"] == "numerical_failure");
}

TEST_CASE("CLI particles and compare are seed-reproducible") {
  TempDir tmp("cmp");
  auto text = std::string(kConfig);
  text.replace(text.find("t_end = 8.0"), 11, "t_end = 0.1");
  text.replace(text.find("snapshot_every = 50"), 19, "snapshot_every = 20");
  const auto cfg = write_config(tmp.path, text);
  REQUIRE(invoke("particles", cfg, tmp.path / "p1", nullptr, 17) == kExitOk);
  REQUIRE(invoke("particles", cfg, tmp.path / "p2", nullptr, 17) == kExitOk);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(tmp.path / "p1" / "final_particles.mvgf") == slurp(tmp.path / "p2" / "final_particles.mvgf"));

  REQUIRE(invoke("compare", cfg, tmp.path / "c") == kExitOk);
  const auto rows_path = tmp.path / "c" / "compare.csv";
  REQUIRE(fs::exists(rows_path));
  const auto pde = read_snapshot_index(tmp.path / "c" / "pde" / "snapshots.csv");
  const auto part = read_snapshot_index(tmp.path / "c" / "particles" / "particle_snapshots.csv");
  const auto rows = compare_snapshots(pde, part, 1e-3);
  REQUIRE(rows.size() >= 2);
  CHECK(rows.back().t_a == doctest::Approx(0.1));
  CHECK(rows.back().l1 < 0.5);
  CHECK(rows.back().d2 <= rows.back().tv_bound + 1e-12);
}
