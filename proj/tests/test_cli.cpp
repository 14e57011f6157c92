#include "carleman/config.hpp"
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

// Binary under test, exported by the build as CARLEMAN_LAB_BIN.
std::string lab_bin() {
  const char* bin = std::getenv("CARLEMAN_LAB_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "CARLEMAN_LAB_BIN must point at the carleman-lab binary");
  return bin;
}

struct ScratchDir {
  fs::path root;
  ScratchDir() {
    root = fs::temp_directory_path() / "carleman_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~ScratchDir() { fs::remove_all(root); }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

int run_lab(const std::string& args) {
  const std::string cmd = lab_bin() + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool same_bytes(const std::string& a, const std::string& b) { return slurp(a) == slurp(b); }

const char* kGoodGeometry =
    "[run]\n"
    "seed = 3\n"
    "[domain]\n"
    "dim = 2\n"
    "lo = 0 0\n"
    "hi = 1 1\n"
    "cells = 16\n"
    "[coefficients]\n"
    "kind = identity\n"
    "[weight]\n"
    "x0 = -0.5 0.5\n"
    "[time]\n"
    "T = auto\n"
    "eps = 0.05\n";

}  // namespace

TEST_CASE("usage and config errors exit with code 2") {
  const ScratchDir tmp;
  CHECK(run_lab("--help") == 0);
  CHECK(run_lab("") == 2);
  CHECK(run_lab("no-such-command") == 2);
  CHECK(run_lab("simulate") == 2);
  CHECK(run_lab("simulate --config /no/such/file.ini") == 2);

  // Syntactically fine but semantically broken configs.
  const std::string bad_key = tmp / "bad_key.ini";
  write_file(bad_key, std::string(kGoodGeometry) + "[stray]\nknob = 1\n");
  CHECK(run_lab("check-geometry --config " + bad_key + " --out " + (tmp / "o1")) == 2);

  const std::string inside = tmp / "x0_inside.ini";
  std::string text = kGoodGeometry;
  text.replace(text.find("x0 = -0.5 0.5"), 13, "x0 = 0.5 0.50");
  write_file(inside, text);
  CHECK(run_lab("check-geometry --config " + inside + " --out " + (tmp / "o2")) == 2);

  const std::string bad_T = tmp / "bad_T.ini";
  text = kGoodGeometry;
  text.replace(text.find("T = auto"), 8, "T = soon");
  write_file(bad_T, text);
  CHECK(run_lab("check-geometry --config " + bad_T + " --out " + (tmp / "o3")) == 2);
}

TEST_CASE("check-geometry reports the resolved automatic horizon") {
  const ScratchDir tmp;
  const std::string cfg_path = tmp / "geom.ini";
  write_file(cfg_path, kGoodGeometry);
  const std::string out = tmp / "out";
  CHECK(run_lab("check-geometry --config " + cfg_path + " --out " + out) == 0);

  const std::string report = slurp(out + "/geometry_report.json");
  // T = auto resolves to 1.05x the threshold sqrt(2.5).
  CHECK(report.find("\"T\": 1.6601957715883993") != std::string::npos);
  CHECK(report.find("\"min_observation_time\": 1.5811388300841898") != std::string::npos);
  CHECK(report.find("\"admissible\": true") != std::string::npos);
  CHECK(report.find("\"pass\": true") != std::string::npos);

  // The resolved config is written back and hashes to the stamp in the report.
  using carleman::Config;
  const Config resolved = Config::parse_file(out + "/resolved_config.ini");
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(carleman::config_hash(resolved)));
  CHECK(report.find(std::string("\"config_hash\": \"") + buf + "\"") != std::string::npos);

  // A horizon below the threshold is an admissibility failure, not an error.
  // The cutoff width must go too: calibration alone rejects such a horizon.
  std::string text = kGoodGeometry;
  text.replace(text.find("T = auto"), 8, "T = 1.00");
  text.erase(text.find("eps = 0.05"), 11);
  const std::string short_T = tmp / "short_T.ini";
  write_file(short_T, text);
  CHECK(run_lab("check-geometry --config " + short_T + " --out " + (tmp / "o2")) == 1);
}

TEST_CASE("seed override lands in the resolved config") {
  const ScratchDir tmp;
  const std::string cfg_path = tmp / "geom.ini";
  write_file(cfg_path, kGoodGeometry);
  const std::string out = tmp / "out";
  CHECK(run_lab("check-geometry --config " + cfg_path + " --out " + out + " --seed 42") ==
        0);
  const std::string resolved = slurp(out + "/resolved_config.ini");
  CHECK(resolved.find("seed = 42") != std::string::npos);
  CHECK(resolved.find("seed = 3") == std::string::npos);
}

TEST_CASE("every subcommand runs clean and reruns byte-identically") {
  const ScratchDir tmp;
  struct Job {
    std::string name;
    std::string config;
    std::vector<std::string> artifacts;
  };
  const std::vector<Job> jobs = {
      {"check-geometry", kGoodGeometry, {"geometry_report.json"}},
      {"simulate",
       "[run]\nseed = 1\n"
       "[domain]\ndim = 2\nlo = 0 0\nhi = 1 1\ncells = 8\n"
       "[coefficients]\nkind = perturbed\namp = 0.2\n"
       "[kernel]\nkind = exponential\nlambda = 2.0\namplitude = 0.5\nderivs = value\n"
       "[initial]\nu0 = sine\nu0_amp = 1.0\n"
       "[time]\nT = 0.5\ndt = auto\n",
       {"final_state.bin", "final_state.bin.json", "trace.bin", "trace.bin.json",
        "energy.csv", "simulate_report.json"}},
      // The scheme invariant is exactly conserved only without memory; kernel
      // runs are judged on energy growth alone.
      {"energy-report",
       "[run]\nseed = 1\n"
       "[domain]\ndim = 2\nlo = 0 0\nhi = 1 1\ncells = 8\n"
       "[coefficients]\nkind = identity\n"
       "[kernel]\nkind = zero\n"
       "[initial]\nu0 = sine\n"
       "[time]\nT = 0.5\n"
       "[energy]\nmax_growth = 10\ninvariant_tol = 1e-8\n",
       {"energy.csv", "energy_report.json"}},
      {"carleman-scan",
       "[run]\nseed = 11\n"
       "[domain]\ndim = 2\nlo = 0 0\nhi = 1 1\ncells = 8\n"
       "[coefficients]\nkind = identity\n"
       "[weight]\nx0 = -0.5 0.5\n"
       "[time]\nT = 1.0\n"
       "[scan]\nwhich = hyperbolic\ns = 1 40 6\nframes = 16\nkmax = 2\nterms = 2\n",
       {"scan.csv", "scan_report.json"}},
      {"observability",
       "[run]\nseed = 7\n"
       "[domain]\ndim = 2\nlo = 0 0\nhi = 1 1\ncells = 6\n"
       "[coefficients]\nkind = identity\n"
       "[kernel]\nkind = zero\n"
       "[weight]\nx0 = -0.5 0.5\n"
       "[time]\nT = 0.8\n"
       "[ensemble]\nsamples = 2\nkmax = 2\nwindow_pow = 2\n",
       {"samples.csv", "observability_report.json"}},
      {"reconstruct",
       "[run]\nseed = 5\n"
       "[domain]\ndim = 1\nlo = 0\nhi = 1\ncells = 16\n"
       "[coefficients]\nkind = identity\n"
       "[kernel]\nkind = zero\n"
       "[observation]\nmode = faces\nfaces = x_lo x_hi\n"
       "[source]\nkind = sine\nkind_amp = 1.0\n"
       "[time]\nT = 0.8\n"
       "[reconstruction]\nmax_iters = 40\nerror_tol = 0.05\n",
       {"reconstructed.bin", "reconstructed.bin.json", "history.csv",
        "reconstruct_report.json"}},
      {"stability-sweep",
       "[run]\nseed = 9\n"
       "[domain]\ndim = 2\nlo = 0 0\nhi = 1 1\ncells = 6\n"
       "[coefficients]\nkind = identity\n"
       "[kernel]\nkind = zero\n"
       "[weight]\nx0 = -0.5 0.5\n"
       "[time]\nT = 0.6\n"
       // Plumbing check on a deliberately coarse pair of grids; the tight
       // refinement tolerance is enforced by the full-size acceptance run.
       "[ensemble]\nsweep = lipschitz\nsamples = 2\nkmax = 2\ndrift_tol = 0.6\n",
       {"samples.csv", "stability_report.json"}},
  };

  for (const Job& job : jobs) {
    CAPTURE(job.name);
    const std::string cfg_path = tmp / (job.name + ".ini");
    write_file(cfg_path, job.config);
    const std::string out_a = tmp / (job.name + "_a");
    const std::string out_b = tmp / (job.name + "_b");
    CHECK(run_lab(job.name + " --config " + cfg_path + " --out " + out_a + " --quiet") ==
          0);
    CHECK(run_lab(job.name + " --config " + cfg_path + " --out " + out_b + " --quiet") ==
          0);
    for (const std::string& artifact : job.artifacts) {
      CAPTURE(artifact);
      REQUIRE(fs::exists(out_a + "/" + artifact));
      CHECK(same_bytes(out_a + "/" + artifact, out_b + "/" + artifact));
    }
    CHECK(same_bytes(out_a + "/resolved_config.ini", out_b + "/resolved_config.ini"));
  }
}

TEST_CASE("scan csv carries one row per grid point") {
  const ScratchDir tmp;
  const std::string cfg_path = tmp / "scan.ini";
  write_file(cfg_path,
             "[run]\nseed = 11\n"
             "[domain]\ndim = 2\nlo = 0 0\nhi = 1 1\ncells = 8\n"
             "[coefficients]\nkind = identity\n"
             "[weight]\nx0 = -0.5 0.5\n"
             "[time]\nT = 1.0\n"
             "[scan]\nwhich = memory\nq = 2\ns = 8 64 5\nframes = 16\nkmax = 2\n"
             "terms = 2\n");
  // memory scan needs the cutoff width.
  std::string text = slurp(cfg_path);
  text.replace(text.find("T = 1.0"), 7, "T = 1.0\neps = 0.05");
  write_file(cfg_path, text);
  const std::string out = tmp / "out";
  CHECK(run_lab("carleman-scan --config " + cfg_path + " --out " + out) == 0);

  std::ifstream csv(out + "/scan.csv");
  std::string line;
  int rows = 0;
  REQUIRE(std::getline(csv, line));
  CHECK(line.rfind("s,lhs_log,rhs_log,ratio_log", 0) == 0);
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("noisy reconstruction is reproducible per seed") {
  const ScratchDir tmp;
  const std::string config =
      "[run]\nseed = 5\n"
      "[domain]\ndim = 1\nlo = 0\nhi = 1\ncells = 16\n"
      "[coefficients]\nkind = identity\n"
      "[kernel]\nkind = zero\n"
      "[observation]\nmode = faces\nfaces = x_lo x_hi\n"
      "[source]\nkind = bump\nkind_amp = 1.0\n"
      "[time]\nT = 0.8\n"
      "[reconstruction]\nmax_iters = 30\nalpha = 1e-6\nnoise = 0.01\n";
  const std::string cfg_path = tmp / "noisy.ini";
  write_file(cfg_path, config);

  CHECK(run_lab("reconstruct --config " + cfg_path + " --out " + (tmp / "a") +
                " --seed 5 --quiet") == 0);
  CHECK(run_lab("reconstruct --config " + cfg_path + " --out " + (tmp / "b") +
                " --seed 5 --quiet") == 0);
  CHECK(run_lab("reconstruct --config " + cfg_path + " --out " + (tmp / "c") +
                " --seed 6 --quiet") == 0);
  CHECK(same_bytes(tmp / "a/reconstructed.bin", tmp / "b/reconstructed.bin"));
  CHECK(!same_bytes(tmp / "a/reconstructed.bin", tmp / "c/reconstructed.bin"));
}
