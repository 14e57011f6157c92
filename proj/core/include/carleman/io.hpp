#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "carleman/fields.hpp"
#include "carleman/forward_solver.hpp"
#include "carleman/geometry.hpp"

namespace carleman {

// All writers are deterministic: no timestamps, no absolute paths, numbers
// rendered with %.17g (round-trip exact), and the originating configuration is
// referenced only through its 64-bit hash.

// Shortest-exact decimal form used by every CSV writer.
std::string format_double(double v);

// Raw little-endian float64 node values in index order (x fastest) plus a
// "<path>.json" sidecar with the grid layout and the config hash.
void write_field(const std::string& path, const Domain& dom, const Field& f,
                 std::uint64_t cfg_hash);
// Reads the raw array back and checks the sidecar against the domain.
Field read_field(const std::string& path, const Domain& dom);

// Boundary trace: raw little-endian float64, frames by channels row-major,
// with channel layout, weights and time axis in the sidecar.
void write_trace(const std::string& path, const BoundaryTrace& trace,
                 std::uint64_t cfg_hash);
BoundaryTrace read_trace(const std::string& path);

// CSV with one header row; rows must all match the column count.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

void write_text(const std::string& path, const std::string& text);

}  // namespace carleman
