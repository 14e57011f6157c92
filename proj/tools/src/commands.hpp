#pragma once

#include "builders.hpp"

namespace carleman::cli {

// Each command returns the process exit code: 0 = success / checks passed,
// 1 = a configured verdict failed, 2 is reserved for usage and config errors
// (reported via exceptions).
int cmd_check_geometry(const RunContext& ctx);
int cmd_simulate(const RunContext& ctx);
int cmd_energy_report(const RunContext& ctx);
int cmd_carleman_scan(const RunContext& ctx);
int cmd_observability(const RunContext& ctx);
int cmd_reconstruct(const RunContext& ctx);
int cmd_stability_sweep(const RunContext& ctx);

}  // namespace carleman::cli
