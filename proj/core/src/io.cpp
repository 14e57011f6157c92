#include "carleman/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw array files assume a little-endian host");

namespace carleman {

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("io: cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("io: cannot open '" + path + "'");
  return in;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("io: short read");
}

json load_sidecar(const std::string& path) {
  std::ifstream in = open_in(path + ".json", std::ios::in);
  json j;
  in >> j;
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_field(const std::string& path, const Domain& dom, const Field& f,
                 std::uint64_t cfg_hash) {
  if (f.size() != dom.num_nodes())
    throw std::invalid_argument("write_field: size mismatch");
  {
    std::ofstream out = open_out(path, std::ios::binary);
    write_doubles(out, f.data(), f.size());
  }
  json j;
  j["kind"] = "field";
  j["dim"] = dom.dim();
  std::vector<int> shape{dom.nodes(0)};
  if (dom.dim() == 2) shape.push_back(dom.nodes(1));
  j["shape"] = shape;
  j["order"] = "x-fastest";
  j["spacing"] = dom.spacing();
  j["lo"] = std::vector<double>{dom.lower()[0], dom.lower()[1]};
  j["hi"] = std::vector<double>{dom.upper()[0], dom.upper()[1]};
  j["dtype"] = "float64-le";
  j["config_hash"] = hex64(cfg_hash);
  open_out(path + ".json", std::ios::out) << j.dump(2) << "\n";
}

Field read_field(const std::string& path, const Domain& dom) {
  const json j = load_sidecar(path);
  if (j.at("kind") != "field" || j.at("dim") != dom.dim())
    throw std::runtime_error("read_field: sidecar does not describe this domain");
  if (j.at("shape").at(0) != dom.nodes(0) ||
      (dom.dim() == 2 && j.at("shape").at(1) != dom.nodes(1)))
    throw std::runtime_error("read_field: shape mismatch");
  Field f(dom.num_nodes());
  std::ifstream in = open_in(path, std::ios::binary);
  read_doubles(in, f.data(), f.size());
  return f;
}

void write_trace(const std::string& path, const BoundaryTrace& trace,
                 std::uint64_t cfg_hash) {
  const std::size_t channels = trace.weights.size();
  {
    std::ofstream out = open_out(path, std::ios::binary);
    for (const auto& frame : trace.values) {
      if (frame.size() != channels)
        throw std::invalid_argument("write_trace: ragged frame");
      write_doubles(out, frame.data(), frame.size());
    }
  }
  json j;
  j["kind"] = "trace";
  j["frames"] = trace.values.size();
  j["channels"] = channels;
  j["t0"] = trace.t0;
  j["dt"] = trace.dt;
  j["boundary_ids"] = trace.boundary_ids;
  j["weights"] = trace.weights;
  j["dtype"] = "float64-le";
  j["config_hash"] = hex64(cfg_hash);
  open_out(path + ".json", std::ios::out) << j.dump(2) << "\n";
}

BoundaryTrace read_trace(const std::string& path) {
  const json j = load_sidecar(path);
  if (j.at("kind") != "trace")
    throw std::runtime_error("read_trace: sidecar is not a trace");
  BoundaryTrace trace;
  trace.t0 = j.at("t0").get<double>();
  trace.dt = j.at("dt").get<double>();
  trace.boundary_ids = j.at("boundary_ids").get<std::vector<std::size_t>>();
  trace.weights = j.at("weights").get<std::vector<double>>();
  const std::size_t frames = j.at("frames").get<std::size_t>();
  const std::size_t channels = j.at("channels").get<std::size_t>();
  if (channels != trace.weights.size())
    throw std::runtime_error("read_trace: inconsistent sidecar");
  std::ifstream in = open_in(path, std::ios::binary);
  trace.values.assign(frames, std::vector<double>(channels));
  for (auto& frame : trace.values) read_doubles(in, frame.data(), channels);
  return trace;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path, std::ios::out);
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << (c ? "," : "") << columns[c];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::invalid_argument("write_csv: row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << format_double(row[c]);
    out << "\n";
  }
}

void write_text(const std::string& path, const std::string& text) {
  open_out(path, std::ios::out) << text;
}

}  // namespace carleman
