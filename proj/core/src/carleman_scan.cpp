#include "carleman/carleman_scan.hpp"

#include "carleman/parallel.hpp"

#include "carleman/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace carleman {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double fit_slope(const std::vector<ScanPoint>& pts, double poly_order) {
  // Least squares of ratio_log - poly_order log(s) against s, restricted to
  // the upper half of the grid. The two sides of each estimate differ by an
  // explicit polynomial prefactor (up to s^poly_order), so a healthy ratio
  // may rise like poly_order log(s); only a residual slope that persists in
  // the tail signals the e^{cs} growth of a genuinely failing estimate.
  const std::size_t n = pts.size();
  if (n < 2) return 0.0;
  const std::size_t lo = n >= 4 ? n / 2 : 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(n - lo);
  for (std::size_t i = lo; i < n; ++i) {
    const double x = pts[i].s;
    const double y = pts[i].ratio_log - poly_order * std::log(std::max(pts[i].s, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  if (denom <= 0.0) return 0.0;
  return (m * sxy - sx * sy) / denom;
}

void finalize_curve(ScanCurve& curve, double slope_tol, double poly_order) {
  curve.max_ratio_log = kNegInf;
  bool finite = true;
  for (ScanPoint& p : curve.points) {
    p.rhs_log = log_sum_exp(p.term_log);
    p.ratio_log = p.lhs_log - p.rhs_log;
    curve.max_ratio_log = std::max(curve.max_ratio_log, p.ratio_log);
    if (!std::isfinite(p.ratio_log)) finite = false;
  }
  curve.slope =
      finite ? fit_slope(curve.points, poly_order) : std::numeric_limits<double>::infinity();
  curve.bounded = finite && curve.slope <= slope_tol;
}

void require_symmetric_grid(const SpaceTimeField& u, const char* who) {
  const double t_end = u.time(u.steps());
  if (std::abs(u.t0 + t_end) > 1e-9 * std::max(1.0, std::abs(t_end)))
    throw std::invalid_argument(std::string(who) + ": time grid must be symmetric about zero");
}

void require_dirichlet_frames(const Domain& dom, const SpaceTimeField& y, const char* who) {
  double scale = 0.0, worst = 0.0;
  for (const Field& f : y.frames) scale = std::max(scale, norm_linf(f));
  for (const Field& f : y.frames)
    for (const BoundaryNode& bn : dom.boundary())
      worst = std::max(worst, std::abs(f[bn.node]));
  if (worst > 1e-9 * std::max(scale, 1e-300))
    throw std::invalid_argument(std::string(who) + ": field must vanish on the boundary");
}

// Squared-magnitude density frames shared by several scans.
SpaceTimeField like(const SpaceTimeField& u) {
  SpaceTimeField d;
  d.dom = u.dom;
  d.t0 = u.t0;
  d.dt = u.dt;
  d.frames.assign(u.frames.size(), Field(u.frames[0].size(), 0.0));
  return d;
}

void add_square(SpaceTimeField& acc, const SpaceTimeField& u) {
  for (std::size_t k = 0; k < acc.frames.size(); ++k) {
    const Field& f = u.frames[k];
    Field& a = acc.frames[k];
    for (std::size_t m = 0; m < a.size(); ++m) a[m] += f[m] * f[m];
  }
}

// L2(Sigma) squared of the conormal derivative of y over the selected boundary
// subset (trapezoid in time, arc weights in space).
double boundary_flux_sq(const Domain& dom, const CoefficientField& coef,
                        const SpaceTimeField& y, const std::vector<std::size_t>& ids) {
  const auto& bnodes = dom.boundary();
  std::vector<std::size_t> sel = ids;
  if (sel.empty()) {
    sel.resize(bnodes.size());
    for (std::size_t i = 0; i < sel.size(); ++i) sel[i] = i;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < y.frames.size(); ++k) {
    const std::vector<double> flux = conormal_values(dom, coef, y.frames[k], sel);
    const double tw = (k == 0 || k + 1 == y.frames.size()) ? 0.5 * y.dt : y.dt;
    double frame = 0.0;
    for (std::size_t c = 0; c < sel.size(); ++c)
      frame += bnodes[sel[c]].weight * flux[c] * flux[c];
    acc += tw * frame;
  }
  return acc;
}

// Running integral from t = 0 outwards of a nonnegative density, per node:
// out(t) = |integral_0^t g|, on a grid symmetric about zero.
SpaceTimeField center_prefix(const SpaceTimeField& g) {
  require_symmetric_grid(g, "center_prefix");
  const int n = g.steps();
  const int k0 = static_cast<int>(std::llround(-g.t0 / g.dt));
  SpaceTimeField out = like(g);
  for (int k = k0 + 1; k <= n; ++k) {
    const Field& prev = out.frames[k - 1];
    Field& cur = out.frames[k];
    for (std::size_t m = 0; m < cur.size(); ++m)
      cur[m] = prev[m] + 0.5 * g.dt * (g.frames[k - 1][m] + g.frames[k][m]);
  }
  for (int k = k0 - 1; k >= 0; --k) {
    const Field& prev = out.frames[k + 1];
    Field& cur = out.frames[k];
    for (std::size_t m = 0; m < cur.size(); ++m)
      cur[m] = prev[m] + 0.5 * g.dt * (g.frames[k][m] + g.frames[k + 1][m]);
  }
  return out;
}

}  // namespace

PhiGrid tabulate_phi(const Domain& dom, const CarlemanWeight& w, double t0, double dt,
                     int n_frames) {
  PhiGrid grid;
  grid.phi.assign(n_frames, Field());
  grid.phi_max = kNegInf;
  parallel_for(static_cast<std::size_t>(n_frames), [&](std::size_t k) {
    const double t = t0 + static_cast<double>(k) * dt;
    Field f(dom.num_nodes());
    for (std::size_t m = 0; m < f.size(); ++m) f[m] = w.phi(dom.node(m), t);
    grid.phi[k] = std::move(f);
  });
  for (const Field& f : grid.phi)
    grid.phi_max = std::max(grid.phi_max, *std::max_element(f.begin(), f.end()));
  return grid;
}

double log_sum_exp(const std::vector<double>& logs) {
  double m = kNegInf;
  for (double v : logs) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - m);
  return m + std::log(acc);
}

WeightedValue weighted_integral(const Domain& dom, const SpaceTimeField& density,
                                const PhiGrid& grid, double s, double power) {
  if (grid.phi.size() != density.frames.size())
    throw std::invalid_argument("weighted_integral: weight table does not match the grid");
  if (!(s > 0.0)) throw std::invalid_argument("weighted_integral: s must be positive");
  const Field qw = quadrature_weights(dom);
  double acc = 0.0;
  for (std::size_t k = 0; k < density.frames.size(); ++k) {
    const double tw = (k == 0 || k + 1 == density.frames.size()) ? 0.5 * density.dt
                                                                 : density.dt;
    const Field& g = density.frames[k];
    const Field& phi = grid.phi[k];
    double frame = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
      double term = g[m] * std::exp(2.0 * s * (phi[m] - grid.phi_max));
      if (power != 0.0) term *= std::pow(phi[m], power);
      frame += qw[m] * term;
    }
    acc += tw * frame;
  }
  WeightedValue out;
  if (acc <= 0.0) {
    out.value = 0.0;
    out.log_value = kNegInf;
    return out;
  }
  out.log_value = std::log(acc) + 2.0 * s * grid.phi_max + power * std::log(s);
  out.value = std::exp(out.log_value);
  return out;
}

std::vector<double> make_s_grid(double lo, double hi, int n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo))
    throw std::invalid_argument("make_s_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = lo + (hi - lo) * i / (n - 1);
  return s;
}

ScanCurve hyperbolic_estimate_scan(const Domain& dom, const CoefficientField& coef,
                                   const CarlemanWeight& w, const SpaceTimeField& y,
                                   const std::vector<std::size_t>& gamma_ids,
                                   const std::vector<double>& s_values, double slope_tol) {
  require_dirichlet_frames(dom, y, "hyperbolic_estimate_scan");
  const PhiGrid grid = tabulate_phi(dom, w, y.t0, y.dt, static_cast<int>(y.frames.size()));

  SpaceTimeField grad_sq = like(y);
  add_square(grad_sq, time_derivative(y, 1));
  add_square(grad_sq, space_derivative(y, Deriv::d1));
  if (dom.dim() == 2) add_square(grad_sq, space_derivative(y, Deriv::d2));
  SpaceTimeField val_sq = like(y);
  add_square(val_sq, y);

  SpaceTimeField resid = time_derivative(y, 2);
  for (std::size_t k = 0; k < resid.frames.size(); ++k) {
    const Field ay = apply_operator_a(dom, coef, y.frames[k], true);
    for (std::size_t m = 0; m < ay.size(); ++m) resid.frames[k][m] -= ay[m];
  }
  SpaceTimeField resid_sq = like(y);
  add_square(resid_sq, resid);

  const double lg = std::log(w.gamma);
  const double flux_log = std::log(std::max(boundary_flux_sq(dom, coef, y, gamma_ids), 0.0));

  ScanCurve curve;
  curve.name = "hyperbolic";
  curve.term_names = {"wave_residual", "boundary_flux"};
  for (double s : s_values) {
    ScanPoint p;
    p.s = s;
    p.lhs_log = log_sum_exp({lg + weighted_integral(dom, grad_sq, grid, s, 1.0).log_value,
                             3.0 * lg + weighted_integral(dom, val_sq, grid, s, 3.0).log_value});
    p.term_log = {weighted_integral(dom, resid_sq, grid, s, 0.0).log_value, flux_log};
    curve.points.push_back(std::move(p));
  }
  finalize_curve(curve, slope_tol, 3.0);
  return curve;
}

ScanCurve elliptic_estimate_scan(const Domain& dom, const CoefficientField& coef,
                                 const CarlemanWeight& w, const SpaceTimeField& y,
                                 const std::vector<std::size_t>& gamma_ids,
                                 const std::vector<double>& s_values, double p,
                                 double slope_tol) {
  require_dirichlet_frames(dom, y, "elliptic_estimate_scan");
  const PhiGrid grid = tabulate_phi(dom, w, y.t0, y.dt, static_cast<int>(y.frames.size()));

  SpaceTimeField hess_sq = like(y);
  add_square(hess_sq, space_derivative(y, Deriv::d11));
  if (dom.dim() == 2) {
    add_square(hess_sq, space_derivative(y, Deriv::d12));
    add_square(hess_sq, space_derivative(y, Deriv::d22));
  }
  SpaceTimeField grad_sq = like(y);
  add_square(grad_sq, space_derivative(y, Deriv::d1));
  if (dom.dim() == 2) add_square(grad_sq, space_derivative(y, Deriv::d2));
  SpaceTimeField val_sq = like(y);
  add_square(val_sq, y);

  SpaceTimeField ay_sq = like(y);
  for (std::size_t k = 0; k < y.frames.size(); ++k) {
    const Field ay = apply_operator_a(dom, coef, y.frames[k], true);
    Field& a = ay_sq.frames[k];
    for (std::size_t m = 0; m < ay.size(); ++m) a[m] = ay[m] * ay[m];
  }

  const double lg = std::log(w.gamma);
  const double flux_log = std::log(std::max(boundary_flux_sq(dom, coef, y, gamma_ids), 0.0));

  ScanCurve curve;
  curve.name = "elliptic p=" + std::to_string(p);
  curve.term_names = {"elliptic_residual", "boundary_flux"};
  for (double s : s_values) {
    ScanPoint pt;
    pt.s = s;
    pt.lhs_log =
        log_sum_exp({weighted_integral(dom, hess_sq, grid, s, p).log_value,
                     2.0 * lg + weighted_integral(dom, grad_sq, grid, s, p + 2.0).log_value,
                     4.0 * lg + weighted_integral(dom, val_sq, grid, s, p + 4.0).log_value});
    pt.term_log = {weighted_integral(dom, ay_sq, grid, s, p + 1.0).log_value, flux_log};
    curve.points.push_back(std::move(pt));
  }
  finalize_curve(curve, slope_tol, 3.0);
  return curve;
}

ScanCurve memory_weight_scan(const Domain& dom, const CarlemanWeight& w,
                             const CutoffFunction& chi, const SpaceTimeField& w_field,
                             double q, const std::vector<double>& s_values,
                             double slope_tol) {
  if (q < 0.0) throw std::invalid_argument("memory_weight_scan: q must be nonnegative");
  require_symmetric_grid(w_field, "memory_weight_scan");
  const int n_frames = static_cast<int>(w_field.frames.size());
  const PhiGrid grid = tabulate_phi(dom, w, w_field.t0, w_field.dt, n_frames);

  SpaceTimeField abs_w = like(w_field);
  SpaceTimeField sq_w = like(w_field);
  for (int k = 0; k < n_frames; ++k)
    for (std::size_t m = 0; m < w_field.frames[k].size(); ++m) {
      const double v = w_field.frames[k][m];
      abs_w.frames[k][m] = std::abs(v);
      sq_w.frames[k][m] = v * v;
    }
  const SpaceTimeField run_abs = center_prefix(abs_w);
  const SpaceTimeField run_sq = center_prefix(sq_w);

  // lhs: chi^2 (run_abs)^2; rhs1: chi^2 w^2; rhs2: |dt(chi^2)| run_sq.
  SpaceTimeField lhs_d = like(w_field), rhs1_d = like(w_field), rhs2_d = like(w_field);
  for (int k = 0; k < n_frames; ++k) {
    const double t = w_field.time(k);
    const double c = chi.value(t);
    const double dc2 = std::abs(2.0 * c * chi.d1(t));
    for (std::size_t m = 0; m < lhs_d.frames[k].size(); ++m) {
      lhs_d.frames[k][m] = c * c * run_abs.frames[k][m] * run_abs.frames[k][m];
      rhs1_d.frames[k][m] = c * c * sq_w.frames[k][m];
      rhs2_d.frames[k][m] = dc2 * run_sq.frames[k][m];
    }
  }

  double phi_min = std::numeric_limits<double>::infinity();
  for (const Field& f : grid.phi) phi_min = std::min(phi_min, *std::min_element(f.begin(), f.end()));

  ScanCurve curve;
  curve.name = "history-weight q=" + std::to_string(q);
  if (!s_values.empty() && s_values.front() * phi_min < 1.0)
    curve.name += " [s phi < 1 at the low end]";
  curve.term_names = {"pointwise", "cutoff_band"};
  const double lg = std::log(w.gamma);
  for (double s : s_values) {
    ScanPoint p;
    p.s = s;
    p.lhs_log = weighted_integral(dom, lhs_d, grid, s, q).log_value;
    p.term_log = {-lg + weighted_integral(dom, rhs1_d, grid, s, q - 1.0).log_value,
                  -lg + weighted_integral(dom, rhs2_d, grid, s, q - 1.0).log_value};
    curve.points.push_back(std::move(p));
  }
  finalize_curve(curve, slope_tol, 1.0);
  return curve;
}

MainScanReport main_estimate_scan(const SimulationResult& sim,
                                  const std::function<Field(const Domain&, double)>& source,
                                  const std::function<Field(const Domain&, double)>& source_dt,
                                  const CarlemanWeight& w, const CutoffFunction& chi,
                                  const std::vector<std::size_t>& gamma_ids,
                                  const std::vector<double>& s_values,
                                  EstimateVariant variant, double slope_tol) {
  const SpaceTimeField& u = sim.u;
  const Domain& dom = u.dom;
  require_symmetric_grid(u, "main_estimate_scan");
  if (!source) throw std::invalid_argument("main_estimate_scan: source callable missing");
  if (variant == EstimateVariant::second_derivative_family && !source_dt)
    throw std::invalid_argument(
        "main_estimate_scan: the second derivative family needs the source time derivative");

  const int n_frames = static_cast<int>(u.frames.size());
  const PhiGrid grid = tabulate_phi(dom, w, u.t0, u.dt, n_frames);
  const double t_end = u.time(u.steps());

  MainScanReport report;

  // Source samples, boundary flatness, and the weighted source residuals.
  SpaceTimeField f_frames = like(u);
  double f_scale = 0.0;
  for (int k = 0; k < n_frames; ++k) {
    f_frames.frames[k] = source(dom, u.time(k));
    f_scale = std::max(f_scale, norm_linf(f_frames.frames[k]));
  }
  for (int k = 0; k < n_frames; ++k) {
    const Field& f = f_frames.frames[k];
    const Field d1 = axis_derivative(dom, f, 0, 1);
    Field d2;
    if (dom.dim() == 2) d2 = axis_derivative(dom, f, 1, 1);
    for (const BoundaryNode& bn : dom.boundary()) {
      report.boundary_max_f = std::max(report.boundary_max_f, std::abs(f[bn.node]));
      const double dn = bn.normal[0] * d1[bn.node] +
                        (dom.dim() == 2 ? bn.normal[1] * d2[bn.node] : 0.0);
      report.boundary_max_dnf = std::max(report.boundary_max_dnf, std::abs(dn));
    }
  }
  if (report.boundary_max_f > 1e-6 * std::max(f_scale, 1e-300))
    throw std::invalid_argument("main_estimate_scan: source must vanish on the boundary");

  SpaceTimeField af_sq = like(u);
  for (int k = 0; k < n_frames; ++k) {
    const Field af = apply_operator_a(dom, sim.coef, f_frames.frames[k], true);
    for (std::size_t m = 0; m < af.size(); ++m) af_sq.frames[k][m] = af[m] * af[m];
  }
  if (variant == EstimateVariant::second_derivative_family) {
    for (int k = 0; k < n_frames; ++k) {
      const Field ft = source_dt(dom, u.time(k));
      const Field aft = apply_operator_a(dom, sim.coef, ft, true);
      for (std::size_t m = 0; m < aft.size(); ++m) af_sq.frames[k][m] += aft[m] * aft[m];
    }
  }

  // Low-weight band level: max of phi where the cutoff transitions.
  if (std::abs(chi.T() - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("main_estimate_scan: cutoff horizon must match the grid");
  double delta = 0.0;
  const double t_flat = t_end - 2.0 * chi.eps();
  for (int k = 0; k < n_frames; ++k) {
    const double at = std::abs(u.time(k));
    if (at >= t_flat - 1e-12 && at <= t_end - chi.eps() + 1e-12)
      delta = std::max(delta, *std::max_element(grid.phi[k].begin(), grid.phi[k].end()));
  }
  if (delta <= 0.0) delta = grid.phi_max;  // degenerate band; keep the bound valid

  // Time-regularity weight of the solution and the boundary observation term.
  const int k_time = variant == EstimateVariant::second_derivative_family ? 2 : 1;
  const int m_trace = variant == EstimateVariant::second_derivative_family ? 3 : 2;
  const double unorm_sq = space_time_sobolev_sq(u, k_time, 2);
  const BoundaryTrace trace = conormal_trace(sim, gamma_ids);
  const double trace_log = std::log(std::max(trace_sobolev_sq(trace, m_trace), 1e-300));
  const double phi_cap_log = std::log(grid.phi_max);

  // Left-hand side densities by variant.
  std::vector<std::pair<SpaceTimeField, double>> lhs;  // density, power
  const double lgamma = std::log(w.gamma);
  std::vector<double> lhs_gamma_log;  // additive log gamma factors per density
  if (variant == EstimateVariant::second_difference) {
    SpaceTimeField v = like(u);
    const SpaceTimeField utt = time_derivative(u, 2);
    for (int k = 0; k < n_frames; ++k) {
      const double c = chi.value(u.time(k));
      for (std::size_t m = 0; m < v.frames[k].size(); ++m)
        v.frames[k][m] = c * (utt.frames[k][m] - f_frames.frames[k][m]);
    }
    SpaceTimeField grad_sq = like(u);
    add_square(grad_sq, time_derivative(v, 1));
    add_square(grad_sq, space_derivative(v, Deriv::d1));
    if (dom.dim() == 2) add_square(grad_sq, space_derivative(v, Deriv::d2));
    SpaceTimeField val_sq = like(u);
    add_square(val_sq, v);
    lhs.push_back({std::move(grad_sq), 1.0});
    lhs_gamma_log.push_back(lgamma);
    lhs.push_back({std::move(val_sq), 3.0});
    lhs_gamma_log.push_back(3.0 * lgamma);
  } else {
    auto cut = [&](const SpaceTimeField& g) {
      SpaceTimeField out = g;
      for (int k = 0; k < n_frames; ++k) {
        const double c = chi.value(u.time(k));
        for (double& v : out.frames[k]) v *= c;
      }
      return out;
    };
    SpaceTimeField d0 = like(u), d1 = like(u);
    const SpaceTimeField cu = cut(u);
    const SpaceTimeField cut_ut = cut(time_derivative(u, 1));
    for (const Deriv dv : active_derivs(dom.dim())) {
      add_square(d0, space_derivative(cu, dv));
      add_square(d1, space_derivative(cut_ut, dv));
    }
    lhs.push_back({std::move(d0), 2.0});
    lhs_gamma_log.push_back(0.0);
    lhs.push_back({std::move(d1), 0.0});
    lhs_gamma_log.push_back(0.0);
    if (variant == EstimateVariant::second_derivative_family) {
      SpaceTimeField d2 = like(u);
      const SpaceTimeField cut_utt = cut(time_derivative(u, 2));
      for (const Deriv dv : active_derivs(dom.dim())) add_square(d2, space_derivative(cut_utt, dv));
      lhs.push_back({std::move(d2), 0.0});
      lhs_gamma_log.push_back(0.0);
    }
  }

  ScanCurve& curve = report.curve;
  curve.name = variant == EstimateVariant::second_difference
                   ? "main second-difference"
                   : (variant == EstimateVariant::derivative_family
                          ? "main derivative family"
                          : "main second-derivative family");
  curve.term_names = {"weighted_source", "low_weight_band", "boundary_observation"};
  for (double s : s_values) {
    ScanPoint p;
    p.s = s;
    std::vector<double> lhs_logs;
    for (std::size_t i = 0; i < lhs.size(); ++i)
      lhs_logs.push_back(lhs_gamma_log[i] +
                         weighted_integral(dom, lhs[i].first, grid, s, lhs[i].second).log_value);
    p.lhs_log = log_sum_exp(lhs_logs);
    const double band_log =
        2.0 * std::log(s) + 2.0 * phi_cap_log + 2.0 * s * delta + std::log(unorm_sq);
    p.term_log = {weighted_integral(dom, af_sq, grid, s, 0.0).log_value, band_log, trace_log};
    curve.points.push_back(std::move(p));
  }
  finalize_curve(curve, slope_tol, 2.0);

  report.middle_share.reserve(curve.points.size());
  for (const ScanPoint& p : curve.points)
    report.middle_share.push_back(std::exp(p.term_log[1] - p.rhs_log));
  report.middle_share_decreasing =
      !report.middle_share.empty() && report.middle_share.back() < report.middle_share.front();
  return report;
}

}  // namespace carleman
