#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace carleman::cli;

  CLI::App app{"carleman-lab: numerical laboratory for wave equations with memory"};
  app.require_subcommand(1);

  std::string config, out = ".", seed;
  bool quiet = false;
  std::vector<std::pair<CLI::App*, int (*)(const RunContext&)>> table;
  auto add = [&](const std::string& name, const std::string& desc,
                 int (*fn)(const RunContext&)) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config, "INI configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (default .)");
    sub->add_option("--seed", seed, "override [run] seed");
    sub->add_flag("--quiet", quiet, "suppress progress output");
    table.emplace_back(sub, fn);
  };

  add("check-geometry",
      "validate ellipticity, pseudo-convexity, observation boundary and horizon",
      cmd_check_geometry);
  add("simulate", "run the forward solver; writes trace, final state and energy series",
      cmd_simulate);
  add("energy-report", "energy boundedness and scheme-invariant drift report",
      cmd_energy_report);
  add("carleman-scan", "weighted-inequality parameter scans", cmd_carleman_scan);
  add("observability", "initial-data observability ensemble", cmd_observability);
  add("reconstruct", "regularized source reconstruction from boundary data",
      cmd_reconstruct);
  add("stability-sweep", "two-sided stability ratio ensemble with grid refinement",
      cmd_stability_sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, fn] : table) {
    if (!sub->parsed()) continue;
    try {
      return fn(make_context(config, out, seed, quiet));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
