#include "commands.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "carleman/carleman_scan.hpp"
#include "carleman/io.hpp"
#include "carleman/norms.hpp"
#include "carleman/random.hpp"
#include "json.hpp"

namespace carleman::cli {

namespace {

using nlohmann::json;

void write_report(const RunContext& ctx, const std::string& name, json j) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(ctx.cfg_hash));
  j["config_hash"] = buf;
  write_text(ctx.path(name).string(), j.dump(2) + "\n");
}

json curve_json(const ScanCurve& curve) {
  json j;
  j["name"] = curve.name;
  j["slope"] = curve.slope;
  j["max_ratio_log"] = curve.max_ratio_log;
  j["bounded"] = curve.bounded;
  return j;
}

void write_curve_csv(const RunContext& ctx, const std::string& name,
                     const ScanCurve& curve, const std::vector<double>& middle_share) {
  std::vector<std::string> cols{"s", "lhs_log", "rhs_log", "ratio_log"};
  for (const std::string& t : curve.term_names) cols.push_back(t);
  const bool with_share = middle_share.size() == curve.points.size();
  if (with_share) cols.push_back("middle_share");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const ScanPoint& p = curve.points[i];
    std::vector<double> row{p.s, p.lhs_log, p.rhs_log, p.ratio_log};
    row.insert(row.end(), p.term_log.begin(), p.term_log.end());
    if (with_share) row.push_back(middle_share[i]);
    rows.push_back(std::move(row));
  }
  write_csv(ctx.path(name).string(), cols, rows);
}

std::vector<double> scan_s_values(const Config& cfg) {
  const std::vector<double> s = cfg.get_doubles("scan", "s");
  if (s.size() != 3)
    throw std::invalid_argument("config: scan.s needs 'lo hi count'");
  return make_s_grid(s[0], s[1], static_cast<int>(s[2]));
}

SpaceTimeField synthetic_space_time(const Config& cfg, const Domain& dom,
                                    std::uint64_t seed, double T) {
  const int frames = cfg.get_int("scan", "frames", 64);
  if (frames < 2 || frames % 2 != 0)
    throw std::invalid_argument("config: scan.frames must be even and >= 2");
  const int kmax = cfg.get_int("scan", "kmax", 3);
  const int terms = cfg.get_int("scan", "terms", 3);
  Rng rng(seed);
  const SmoothSpaceTime fn = random_space_time(rng, dom, kmax, terms, T);
  SpaceTimeField y;
  y.dom = dom;
  y.t0 = -T;
  y.dt = 2.0 * T / frames;
  y.frames.reserve(frames + 1);
  for (int k = 0; k <= frames; ++k) {
    const double t = y.t0 + k * y.dt;
    y.frames.push_back(make_field(dom, [&](Point x) { return fn(x, t); }));
  }
  return y;
}

json report_json(const StabilityEnsembleReport& rep) {
  json j;
  j["min_upper"] = rep.min_upper;
  j["max_upper"] = rep.max_upper;
  j["min_lower"] = rep.min_lower;
  j["max_lower"] = rep.max_lower;
  j["min_visibility"] = rep.min_visibility;
  j["max_visibility"] = rep.max_visibility;
  j["spread_upper"] = rep.spread_upper;
  j["spread_lower"] = rep.spread_lower;
  j["samples"] = rep.samples.size();
  return j;
}

std::vector<std::vector<double>> sample_rows(const StabilityEnsembleReport& rep,
                                             double grid_h) {
  std::vector<std::vector<double>> rows;
  for (const StabilitySample& s : rep.samples)
    rows.push_back({grid_h, static_cast<double>(s.seed), s.source_norm, s.trace_gamma,
                    s.trace_full, s.upper_ratio, s.lower_ratio, s.visibility});
  return rows;
}

const std::vector<std::string> kSampleCols{"h",           "seed",        "source_norm",
                                           "trace_gamma", "trace_full",  "upper_ratio",
                                           "lower_ratio", "visibility"};

FieldSampler ensemble_sampler(const Config& cfg) {
  const int kmax = cfg.get_int("ensemble", "kmax", 3);
  const int window_pow = cfg.get_int("ensemble", "window_pow", 2);
  const double amp = cfg.get_double("ensemble", "amplitude", 1.0);
  return sine_sampler(kmax, window_pow, amp);
}

}  // namespace

int cmd_check_geometry(const RunContext& ctx) {
  const Config& cfg = ctx.cfg;
  const Domain dom = build_domain(cfg);
  const CoefficientField coef = build_coefficients(cfg, dom.dim());
  const double mu0 = coef.validate(dom);
  const CarlemanWeight w = build_weight(cfg, dom);

  ConvexitySampling sampling;
  sampling.n_xi = cfg.get_int("convexity", "n_xi", 64);
  sampling.margin = cfg.get_double("convexity", "margin", 1e-6);
  const PseudoConvexityReport pc = check_pseudo_convexity(coef, dom, w.x0, sampling);
  const GammaMask mask = observation_boundary(dom, w.x0);
  const double t_min = min_observation_time(dom, w.x0, w.beta);
  const double T = build_horizon(cfg, dom, false);

  json j;
  j["ellipticity_floor"] = mu0;
  j["pseudo_convexity"] = {{"min_ratio", pc.min_ratio},
                           {"mu1", pc.mu1},
                           {"pass", pc.pass},
                           {"worst_x", {pc.worst_x[0], pc.worst_x[1]}},
                           {"worst_xi", {pc.worst_xi[0], pc.worst_xi[1]}}};
  json faces = json::object();
  for (const auto& [face, status] : mask.face_summary) faces[face] = status;
  j["observation"] = {{"faces", faces}, {"nodes", mask.nodes.size()}};
  j["min_observation_time"] = t_min;
  bool horizon_ok = true;
  if (T > 0.0) {
    horizon_ok = T > t_min;
    j["horizon"] = {{"T", T}, {"admissible", horizon_ok}};
    if (cfg.has("time", "eps")) {
      const CutoffCalibration cal =
          calibrate_cutoff_levels(w, dom, T, cfg.get_double("time", "eps"));
      j["cutoff"] = {{"delta", cal.delta}, {"eps0", cal.eps0}, {"valid", cal.valid}};
    }
  }
  cfg.require_all_consumed();
  write_report(ctx, "geometry_report.json", j);
  ctx.note("ellipticity floor " + format_double(mu0));
  ctx.note("pseudo-convexity min ratio " + format_double(pc.min_ratio) +
           (pc.pass ? " (pass)" : " (FAIL)"));
  ctx.note("observed boundary nodes " + std::to_string(mask.nodes.size()) +
           ", min observation time " + format_double(t_min));
  return pc.pass && horizon_ok ? 0 : 1;
}

int cmd_simulate(const RunContext& ctx) {
  const Config& cfg = ctx.cfg;
  const ProblemSpec spec = build_problem(cfg);
  std::vector<std::size_t> ids;
  if (cfg.has("observation", "mode") || cfg.has("observation", "faces"))
    ids = build_observation_ids(cfg, spec.dom);
  cfg.require_all_consumed();

  const SimulationResult sim = simulate(spec);
  const BoundaryTrace trace = conormal_trace(sim, ids);
  const EnergySeries es = energy_series(sim);

  write_field(ctx.path("final_state.bin").string(), spec.dom, sim.u.frames.back(),
              ctx.cfg_hash);
  write_trace(ctx.path("trace.bin").string(), trace, ctx.cfg_hash);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < es.times.size(); ++k)
    rows.push_back({es.times[k], es.energy[k], es.invariant[k]});
  write_csv(ctx.path("energy.csv").string(), {"t", "energy", "invariant"}, rows);

  json j;
  j["frames"] = sim.u.frames.size();
  j["dt"] = sim.u.dt;
  j["cfl_dt"] = sim.cfl_dt;
  j["ellipticity_floor"] = sim.mu0;
  j["energy_sup_ratio"] = es.sup_ratio;
  j["invariant_drift"] = es.invariant_drift;
  write_report(ctx, "simulate_report.json", j);
  ctx.note("steps " + std::to_string(sim.u.steps()) + ", dt " + format_double(sim.u.dt));
  ctx.note("energy sup ratio " + format_double(es.sup_ratio) + ", invariant drift " +
           format_double(es.invariant_drift));
  return 0;
}

int cmd_energy_report(const RunContext& ctx) {
  const Config& cfg = ctx.cfg;
  const ProblemSpec spec = build_problem(cfg);
  const double max_growth = cfg.get_double("energy", "max_growth", 0.0);
  const double invariant_tol = cfg.get_double("energy", "invariant_tol", 0.0);
  cfg.require_all_consumed();

  const SimulationResult sim = simulate(spec);
  const EnergySeries es = energy_series(sim);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < es.times.size(); ++k)
    rows.push_back({es.times[k], es.energy[k], es.invariant[k]});
  write_csv(ctx.path("energy.csv").string(), {"t", "energy", "invariant"}, rows);

  bool ok = true;
  json j;
  j["initial_energy"] = es.initial_energy;
  j["energy_sup_ratio"] = es.sup_ratio;
  j["invariant_drift"] = es.invariant_drift;
  if (max_growth > 0.0) {
    j["max_growth"] = max_growth;
    j["growth_ok"] = es.sup_ratio <= max_growth;
    ok = ok && es.sup_ratio <= max_growth;
  }
  if (invariant_tol > 0.0) {
    j["invariant_tol"] = invariant_tol;
    j["invariant_ok"] = es.invariant_drift <= invariant_tol;
    ok = ok && es.invariant_drift <= invariant_tol;
  }
  write_report(ctx, "energy_report.json", j);
  ctx.note("energy sup ratio " + format_double(es.sup_ratio) + ", invariant drift " +
           format_double(es.invariant_drift) + (ok ? "" : " (FAIL)"));
  return ok ? 0 : 1;
}

int cmd_carleman_scan(const RunContext& ctx) {
  const Config& cfg = ctx.cfg;
  const std::string which = cfg.get_string("scan", "which", "main");
  const std::vector<double> s_values = scan_s_values(cfg);
  const double slope_tol = cfg.get_double("scan", "slope_tol", 0.05);

  if (which == "main") {
    const ProblemSpec spec = build_problem(cfg);
    const CarlemanWeight w = build_weight(cfg, spec.dom);
    const std::vector<std::size_t> ids = build_observation_ids(cfg, spec.dom);
    const CutoffFunction chi(spec.T, cfg.get_double("time", "eps"));
    const double extend_tol = cfg.get_double("scan", "extend_tol", 1e-2);
    const std::string variant_name =
        cfg.get_string("scan", "variant", "derivative-family");
    EstimateVariant variant;
    if (variant_name == "second-difference")
      variant = EstimateVariant::second_difference;
    else if (variant_name == "derivative-family")
      variant = EstimateVariant::derivative_family;
    else if (variant_name == "second-derivative-family")
      variant = EstimateVariant::second_derivative_family;
    else
      throw std::invalid_argument("config: unknown scan.variant '" + variant_name + "'");
    cfg.require_all_consumed();

    std::function<Field(const Domain&, double)> src, src_dt;
    if (spec.source.mode == SourceMode::separated) {
      const TimeCoefficient r = spec.source.r;
      const Field f = spec.source.f;
      src = [r, f](const Domain& d, double t) {
        Field out = f;
        for (std::size_t m = 0; m < out.size(); ++m) out[m] *= r.r(d.node(m), t);
        return out;
      };
      src_dt = [r, f](const Domain& d, double t) {
        Field out = f;
        for (std::size_t m = 0; m < out.size(); ++m) out[m] *= r.rt(d.node(m), t);
        return out;
      };
    } else if (spec.source.mode == SourceMode::general) {
      src = spec.source.general;
    } else {
      src = [](const Domain& d, double) { return zero_field(d); };
      src_dt = src;
    }

    const SimulationResult sim = simulate(spec);
    const SimulationResult ext = even_extend(sim, extend_tol);
    const MainScanReport rep =
        main_estimate_scan(ext, src, src_dt, w, chi, ids, s_values, variant, slope_tol);

    write_curve_csv(ctx, "scan.csv", rep.curve, rep.middle_share);
    json j = curve_json(rep.curve);
    j["boundary_max_f"] = rep.boundary_max_f;
    j["boundary_max_dnf"] = rep.boundary_max_dnf;
    j["middle_share_front"] = rep.middle_share.empty() ? 0.0 : rep.middle_share.front();
    j["middle_share_back"] = rep.middle_share.empty() ? 0.0 : rep.middle_share.back();
    j["middle_share_decreasing"] = rep.middle_share_decreasing;
    write_report(ctx, "scan_report.json", j);
    const bool ok = rep.curve.bounded && rep.middle_share_decreasing;
    ctx.note("scan '" + rep.curve.name + "': slope " + format_double(rep.curve.slope) +
             (ok ? " (bounded)" : " (FAIL)"));
    return ok ? 0 : 1;
  }

  const Domain dom = build_domain(cfg);
  const CoefficientField coef = build_coefficients(cfg, dom.dim());
  const CarlemanWeight w = build_weight(cfg, dom);
  const double T = build_horizon(cfg, dom);
  ScanCurve curve;
  if (which == "hyperbolic" || which == "elliptic") {
    const std::vector<std::size_t> ids = build_observation_ids(cfg, dom);
    const double p = cfg.get_double("scan", "p", 0.0);
    const SpaceTimeField y = synthetic_space_time(cfg, dom, ctx.seed, T);
    cfg.require_all_consumed();
    curve = which == "hyperbolic"
                ? hyperbolic_estimate_scan(dom, coef, w, y, ids, s_values, slope_tol)
                : elliptic_estimate_scan(dom, coef, w, y, ids, s_values, p, slope_tol);
  } else if (which == "memory") {
    const double q = cfg.get_double("scan", "q", 2.0);
    const CutoffFunction chi(T, cfg.get_double("time", "eps"));
    const SpaceTimeField w_field = synthetic_space_time(cfg, dom, ctx.seed, T);
    cfg.require_all_consumed();
    curve = memory_weight_scan(dom, w, chi, w_field, q, s_values, slope_tol);
  } else {
    throw std::invalid_argument("config: unknown scan.which '" + which + "'");
  }

  write_curve_csv(ctx, "scan.csv", curve, {});
  write_report(ctx, "scan_report.json", curve_json(curve));
  ctx.note("scan '" + curve.name + "': slope " + format_double(curve.slope) +
           (curve.bounded ? " (bounded)" : " (FAIL)"));
  return curve.bounded ? 0 : 1;
}

int cmd_observability(const RunContext& ctx) {
  const Config& cfg = ctx.cfg;
  const ObservationSetup setup = build_setup(cfg);
  const int samples = cfg.get_int("ensemble", "samples", 20);
  const FieldSampler sampler = ensemble_sampler(cfg);
  const double vis_floor = cfg.get_double("ensemble", "visibility_floor", 0.0);
  cfg.require_all_consumed();

  const StabilityEnsembleReport rep =
      observability_sweep(setup, ctx.seed, samples, sampler);
  write_csv(ctx.path("samples.csv").string(), kSampleCols,
            sample_rows(rep, setup.dom.spacing()));
  json j = report_json(rep);
  j["visibility_floor"] = vis_floor;
  write_report(ctx, "observability_report.json", j);
  const bool ok = rep.min_visibility > vis_floor && std::isfinite(rep.spread_upper);
  ctx.note("visibility in [" + format_double(rep.min_visibility) + ", " +
           format_double(rep.max_visibility) + "]" + (ok ? "" : " (FAIL)"));
  return ok ? 0 : 1;
}

int cmd_reconstruct(const RunContext& ctx) {
  const Config& cfg = ctx.cfg;
  const ObservationSetup setup = build_setup(cfg);
  const Field truth = build_field(cfg, setup.dom, "source", "kind");
  const double noise = cfg.get_double("reconstruction", "noise", 0.0);
  ReconstructionOptions opts;
  opts.alpha = cfg.get_double("reconstruction", "alpha", 0.0);
  opts.max_iters = cfg.get_int("reconstruction", "max_iters", 200);
  opts.tol = cfg.get_double("reconstruction", "tol", 1e-12);
  const double error_tol = cfg.get_double("reconstruction", "error_tol", 0.0);
  const std::string data_path = cfg.get_string("reconstruction", "data", "");
  cfg.require_all_consumed();

  BoundaryTrace data;
  if (!data_path.empty()) {
    data = read_trace(data_path);
  } else {
    if (truth.empty())
      throw std::invalid_argument(
          "reconstruct: needs either reconstruction.data or a source truth field");
    data = forward_map(setup, truth);
  }
  if (noise > 0.0) {
    Rng rng(ctx.seed);
    double scale = 0.0;
    for (const auto& frame : data.values)
      for (double v : frame) scale = std::max(scale, std::abs(v));
    for (auto& frame : data.values)
      for (double& v : frame) v += noise * scale * rng.normal();
  }
  if (!truth.empty()) opts.truth = &truth;

  const ReconstructionResult res = reconstruct(setup, data, opts);

  write_field(ctx.path("reconstructed.bin").string(), setup.dom, res.f, ctx.cfg_hash);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < res.residual_history.size(); ++i) {
    std::vector<double> row{static_cast<double>(i), res.residual_history[i]};
    if (i < res.error_history.size()) row.push_back(res.error_history[i]);
    else row.push_back(0.0);
    rows.push_back(std::move(row));
  }
  write_csv(ctx.path("history.csv").string(), {"iter", "residual", "error"}, rows);

  const double final_error = res.error_history.empty() ? 0.0 : res.error_history.back();
  json j;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["data_misfit"] = res.data_misfit;
  if (!res.error_history.empty()) j["final_error"] = final_error;
  write_report(ctx, "reconstruct_report.json", j);
  ctx.note("iterations " + std::to_string(res.iterations) + ", misfit " +
           format_double(res.data_misfit) +
           (res.error_history.empty() ? "" : ", error " + format_double(final_error)));
  if (error_tol > 0.0 && !res.error_history.empty()) return final_error <= error_tol ? 0 : 1;
  return 0;
}

int cmd_stability_sweep(const RunContext& ctx) {
  const Config& cfg = ctx.cfg;
  const ObservationSetup base = build_setup(cfg);
  const std::string sweep = cfg.get_string("ensemble", "sweep", "lipschitz");
  const int samples = cfg.get_int("ensemble", "samples", 20);
  const FieldSampler sampler = ensemble_sampler(cfg);
  const double drift_tol = cfg.get_double("ensemble", "drift_tol", 0.15);
  if (sweep != "lipschitz" && sweep != "observability")
    throw std::invalid_argument("config: unknown ensemble.sweep '" + sweep + "'");

  ObservationSetup fine = base;
  fine.dom = Domain(base.dom.dim(), base.dom.lower(), base.dom.upper(),
                    base.dom.spacing() / 2.0);
  fine.gamma_ids = build_observation_ids(cfg, fine.dom);
  cfg.require_all_consumed();

  auto run = sweep == "lipschitz" ? lipschitz_sweep : observability_sweep;
  const StabilityEnsembleReport rep_base = run(base, ctx.seed, samples, sampler);
  const StabilityEnsembleReport rep_fine = run(fine, ctx.seed, samples, sampler);
  const double drift = endpoint_drift(rep_base, rep_fine);

  std::vector<std::vector<double>> rows = sample_rows(rep_base, base.dom.spacing());
  for (auto& row : sample_rows(rep_fine, fine.dom.spacing())) rows.push_back(row);
  write_csv(ctx.path("samples.csv").string(), kSampleCols, rows);

  json j;
  j["sweep"] = sweep;
  j["base"] = report_json(rep_base);
  j["refined"] = report_json(rep_fine);
  j["endpoint_drift"] = drift;
  j["drift_tol"] = drift_tol;
  write_report(ctx, "stability_report.json", j);
  const bool ok = drift <= drift_tol && std::isfinite(rep_base.spread_upper) &&
                  std::isfinite(rep_base.spread_lower);
  ctx.note("two-sided ratios: upper [" + format_double(rep_base.min_upper) + ", " +
           format_double(rep_base.max_upper) + "], lower [" +
           format_double(rep_base.min_lower) + ", " + format_double(rep_base.max_lower) +
           "], drift " + format_double(drift) + (ok ? "" : " (FAIL)"));
  return ok ? 0 : 1;
}

}  // namespace carleman::cli
