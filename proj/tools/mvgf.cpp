#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "mvgf/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"McKean-Vlasov gradient-flow lab on the flat torus"};
  app.set_version_flag("--version", mvgf::kVersion);
  app.require_subcommand(1, 1);

  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  const char* help[] = {"run", "integrate the PDE and log energy/dissipation",
                        "stationary", "solve for a stationary state by fixed-point iteration",
                        "spectrum", "assemble the linearized operator and its eigenvalues",
                        "fit", "fit the Lojasiewicz exponent to a finished run",
                        "particles", "simulate the N-particle Langevin system",
                        "compare", "distances between two runs at matched times"};
  for (int i = 0; i < 12; i += 2) {
    auto* sub = app.add_subcommand(help[i], help[i + 1]);
    sub->add_option("--config", config, "scenario file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides outputs.dir)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mvgf::kExitConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  return mvgf::main_entry(name, config, out_dir, seed, std::cout, std::cerr);
}
