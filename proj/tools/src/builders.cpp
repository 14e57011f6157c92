#include "builders.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "carleman/io.hpp"

namespace carleman::cli {

namespace {

Point parse_point(const Config& cfg, const std::string& section, const std::string& key,
                  int dim) {
  const std::vector<double> v = cfg.get_doubles(section, key);
  if (static_cast<int>(v.size()) != dim)
    throw std::invalid_argument("config: '" + section + "." + key + "' needs " +
                                std::to_string(dim) + " entries");
  return dim == 1 ? Point{v[0], 0.0} : Point{v[0], v[1]};
}

double window1(double s) { return 4.0 * s * (1.0 - s); }

double parse_number(const std::string& value, const std::string& what) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw std::invalid_argument("config: '" + what + "' is not a number: '" + value + "'");
  return v;
}

}  // namespace

RunContext make_context(const std::string& config_path, const std::string& out_dir,
                        const std::string& seed_override, bool quiet) {
  RunContext ctx;
  ctx.cfg = Config::parse_file(config_path);
  if (!seed_override.empty()) ctx.cfg.set("run", "seed", seed_override);
  ctx.seed = ctx.cfg.get_u64("run", "seed", 0);
  ctx.out = out_dir;
  ctx.quiet = quiet;
  ctx.cfg_hash = config_hash(ctx.cfg);
  std::filesystem::create_directories(ctx.out);
  write_text(ctx.path("resolved_config.ini").string(), ctx.cfg.serialize());
  return ctx;
}

Domain build_domain(const Config& cfg) {
  const int dim = cfg.get_int("domain", "dim", 2);
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("config: domain.dim must be 1 or 2");
  const Point lo = parse_point(cfg, "domain", "lo", dim);
  const Point hi = parse_point(cfg, "domain", "hi", dim);
  const int cells = cfg.get_int("domain", "cells");
  if (cells < 2) throw std::invalid_argument("config: domain.cells must be >= 2");
  const double h = (hi[0] - lo[0]) / cells;
  return Domain(dim, lo, hi, h);
}

CoefficientField build_coefficients(const Config& cfg, int dim) {
  const std::string kind = cfg.get_string("coefficients", "kind", "identity");
  if (kind == "identity") return CoefficientField::identity(dim);
  if (kind == "scalar")
    return CoefficientField::scalar(dim, cfg.get_double("coefficients", "c"));
  if (kind == "diagonal") {
    const double a11 = cfg.get_double("coefficients", "a11");
    const double a22 = cfg.get_double("coefficients", "a22", a11);
    if (dim == 1) return CoefficientField::scalar(1, a11);
    return CoefficientField::diagonal([a11](Point) { return a11; },
                                      [a22](Point) { return a22; });
  }
  if (kind == "perturbed") {
    // Smooth isotropic modulation (1 + amp sin(pi x) cos(pi y / 2)) I.
    const double amp = cfg.get_double("coefficients", "amp");
    if (std::abs(amp) >= 1.0)
      throw std::invalid_argument("config: coefficients.amp must stay below 1");
    auto c = [amp, dim](Point x) {
      const double m = dim == 2 ? std::cos(0.5 * kPi * x[1]) : 1.0;
      return 1.0 + amp * std::sin(kPi * x[0]) * m;
    };
    if (dim == 1)
      return CoefficientField::general(1, c, {}, {}, {});
    return CoefficientField::general(dim, c, [](Point) { return 0.0; },
                                     [](Point) { return 0.0; }, c);
  }
  throw std::invalid_argument("config: unknown coefficients.kind '" + kind + "'");
}

MemoryKernel build_kernel(const Config& cfg, int dim) {
  const std::string kind = cfg.get_string("kernel", "kind", "zero");
  if (kind == "zero") return MemoryKernel::zero(dim);

  const double amplitude = cfg.get_double("kernel", "amplitude");
  MemoryKernel::ProfileArray profiles{};
  std::istringstream derivs(cfg.get_string("kernel", "derivs"));
  std::string name;
  int count = 0;
  while (derivs >> name) {
    int idx = -1;
    const char* names[kNumDeriv] = {"value", "d1", "d2", "d11", "d12", "d22"};
    for (int i = 0; i < kNumDeriv; ++i)
      if (name == names[i]) idx = i;
    if (idx < 0) throw std::invalid_argument("config: unknown kernel deriv '" + name + "'");
    if (dim == 1 && (idx == 2 || idx == 4 || idx == 5))
      throw std::invalid_argument("config: kernel deriv '" + name + "' needs dim 2");
    profiles[idx] = [amplitude](Point) { return amplitude; };
    ++count;
  }
  if (count == 0) throw std::invalid_argument("config: kernel.derivs is empty");

  if (kind == "stationary") return MemoryKernel::stationary(dim, profiles);
  if (kind == "exponential")
    return MemoryKernel::exponential(dim, cfg.get_double("kernel", "lambda"), profiles);
  if (kind == "separable") {
    const double omega = cfg.get_double("kernel", "omega");
    return MemoryKernel::separable(
        dim, profiles,
        [omega](double t, double eta) { return std::cos(omega * (t - eta)); },
        [omega](double t, double eta) { return -omega * std::sin(omega * (t - eta)); });
  }
  throw std::invalid_argument("config: unknown kernel.kind '" + kind + "'");
}

CarlemanWeight build_weight(const Config& cfg, const Domain& dom) {
  const Point x0 = parse_point(cfg, "weight", "x0", dom.dim());
  const double beta = cfg.get_double("weight", "beta", 1.0);
  const double gamma = cfg.get_double("weight", "gamma", 1.0);
  if (cfg.get_bool("weight", "normalized", true))
    return CarlemanWeight::normalized(dom, x0, beta, gamma);
  CarlemanWeight w;
  w.x0 = x0;
  w.beta = beta;
  w.gamma = gamma;
  w.scale = 1.0;
  return w;
}

double build_horizon(const Config& cfg, const Domain& dom, bool required) {
  if (!required && !cfg.has("time", "T")) return 0.0;
  const std::string value = cfg.get_string("time", "T");
  if (value != "auto") return parse_number(value, "time.T");
  if (!cfg.has("weight", "x0"))
    throw std::invalid_argument(
        "config: time.T = auto needs weight.x0 to locate the observation threshold");
  const Point x0 = parse_point(cfg, "weight", "x0", dom.dim());
  const double beta = cfg.get_double("weight", "beta", 1.0);
  return 1.05 * min_observation_time(dom, x0, beta);
}

double build_time_step(const Config& cfg) {
  const std::string value = cfg.get_string("time", "dt", "auto");
  if (value == "auto") return 0.0;
  return parse_number(value, "time.dt");
}

TimeCoefficient build_amplitude(const Config& cfg) {
  const double r_amp = cfg.get_double("source", "r_amp", 0.0);
  if (r_amp == 0.0) return TimeCoefficient::one();
  return TimeCoefficient::cosine(r_amp, [](Point) { return 1.0; });
}

Field build_field(const Config& cfg, const Domain& dom, const std::string& section,
                  const std::string& key) {
  const std::string kind = cfg.get_string(section, key, "none");
  if (kind == "none") return Field{};
  if (kind == "file")
    return read_field(cfg.get_string(section, key + "_file"), dom);

  const double amp = cfg.get_double(section, key + "_amp", 1.0);
  const Point lo = dom.lower(), hi = dom.upper();
  auto rel = [&](Point x, int axis) {
    return (x[axis] - lo[axis]) / (hi[axis] - lo[axis]);
  };
  if (kind == "sine")
    return make_field(dom, [&](Point x) {
      double v = amp * std::sin(kPi * rel(x, 0));
      if (dom.dim() == 2) v *= std::sin(kPi * rel(x, 1));
      return v;
    });
  if (kind == "bump")
    // Squared polynomial window: value, gradient and second derivatives all
    // vanish on the boundary.
    return make_field(dom, [&](Point x) {
      double v = amp * window1(rel(x, 0)) * window1(rel(x, 0));
      if (dom.dim() == 2) v *= window1(rel(x, 1)) * window1(rel(x, 1));
      return v;
    });
  throw std::invalid_argument("config: unknown field kind '" + kind + "' for " + section +
                              "." + key);
}

std::vector<std::size_t> build_observation_ids(const Config& cfg, const Domain& dom) {
  const std::string mode = cfg.get_string("observation", "mode", "auto");
  if (mode == "auto") {
    const Point x0 = parse_point(cfg, "weight", "x0", dom.dim());
    return observation_boundary(dom, x0).nodes;
  }
  if (mode == "faces") {
    std::istringstream in(cfg.get_string("observation", "faces"));
    std::vector<std::string> wanted;
    std::string tok;
    while (in >> tok) wanted.push_back(tok);
    if (wanted.empty())
      throw std::invalid_argument("config: observation.faces is empty");
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < dom.boundary().size(); ++i) {
      const std::string name = face_name(dom.boundary()[i].face);
      for (const std::string& w : wanted)
        if (w == name) {
          ids.push_back(i);
          break;
        }
    }
    if (ids.empty())
      throw std::invalid_argument("config: observation.faces matches no boundary nodes");
    return ids;
  }
  if (mode == "all") {
    std::vector<std::size_t> ids(dom.boundary().size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
  }
  throw std::invalid_argument("config: unknown observation.mode '" + mode + "'");
}

ProblemSpec build_problem(const Config& cfg) {
  ProblemSpec spec;
  spec.dom = build_domain(cfg);
  spec.coef = build_coefficients(cfg, spec.dom.dim());
  spec.kernel = build_kernel(cfg, spec.dom.dim());
  spec.T = build_horizon(cfg, spec.dom);
  spec.dt = build_time_step(cfg);
  spec.u0 = build_field(cfg, spec.dom, "initial", "u0");
  spec.v0 = build_field(cfg, spec.dom, "initial", "v0");
  const Field f = build_field(cfg, spec.dom, "source", "kind");
  if (!f.empty()) {
    spec.source.mode = SourceMode::separated;
    spec.source.r = build_amplitude(cfg);
    spec.source.f = f;
  }
  return spec;
}

ObservationSetup build_setup(const Config& cfg) {
  ObservationSetup setup;
  setup.dom = build_domain(cfg);
  setup.coef = build_coefficients(cfg, setup.dom.dim());
  setup.kernel = build_kernel(cfg, setup.dom.dim());
  setup.r = build_amplitude(cfg);
  setup.T = build_horizon(cfg, setup.dom);
  setup.dt = build_time_step(cfg);
  setup.gamma_ids = build_observation_ids(cfg, setup.dom);
  setup.r_floor = cfg.get_double("observation", "r_floor", 0.0);
  return setup;
}

}  // namespace carleman::cli
