#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "carleman/config.hpp"
#include "carleman/forward_solver.hpp"
#include "carleman/geometry.hpp"
#include "carleman/inverse.hpp"
#include "carleman/memory_kernel.hpp"

namespace carleman::cli {

// Options shared by every subcommand plus the resolved config hash.
struct RunContext {
  Config cfg;
  std::filesystem::path out = ".";
  std::uint64_t seed = 0;
  bool quiet = false;
  std::uint64_t cfg_hash = 0;

  std::filesystem::path path(const std::string& name) const { return out / name; }
  void note(const std::string& line) const {
    if (!quiet) std::cout << line << "\n";
  }
};

// Loads the config, applies the seed override into [run], hashes the resolved
// text and writes resolved_config.ini into the output directory.
RunContext make_context(const std::string& config_path, const std::string& out_dir,
                        const std::string& seed_override, bool quiet);

Domain build_domain(const Config& cfg);
CoefficientField build_coefficients(const Config& cfg, int dim);
MemoryKernel build_kernel(const Config& cfg, int dim);
CarlemanWeight build_weight(const Config& cfg, const Domain& dom);
TimeCoefficient build_amplitude(const Config& cfg);

// [time] T: a number, or "auto" = 1.05x the observation-time threshold of the
// weight center. With `required` unset a missing key resolves to 0.
double build_horizon(const Config& cfg, const Domain& dom, bool required = true);
// [time] dt: a number, or "auto"/absent = 0, which requests the CFL step.
double build_time_step(const Config& cfg);

// Named analytic fields: `key` holds the kind (none | sine | bump | file),
// `key_amp` the amplitude, `key_file` the array path for kind = file.
Field build_field(const Config& cfg, const Domain& dom, const std::string& section,
                  const std::string& key);

// [observation] mode = auto (sign condition at the weight center) or faces.
std::vector<std::size_t> build_observation_ids(const Config& cfg, const Domain& dom);

ProblemSpec build_problem(const Config& cfg);
ObservationSetup build_setup(const Config& cfg);

}  // namespace carleman::cli
