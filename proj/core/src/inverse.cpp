#include "carleman/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace carleman {

namespace {

void zero_boundary(const Domain& dom, Field& f) {
  for (const BoundaryNode& bn : dom.boundary()) f[bn.node] = 0.0;
}

void require_interior_support(const Domain& dom, const Field& f, const char* who) {
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  for (const BoundaryNode& bn : dom.boundary())
    if (std::abs(f[bn.node]) > 1e-12 * std::max(scale, 1e-300))
      throw std::invalid_argument(std::string(who) + ": field must vanish on the boundary");
}

// Transpose of the history operator w -> sum_alpha g_alpha d^alpha w on
// interior-supported fields: first-order stencils flip sign, the others are
// their own transposes.
struct HistoryTranspose {
  const Domain* dom;
  const MemoryKernel* kernel;
  std::array<Field, kNumDeriv> profiles;

  HistoryTranspose(const Domain& d, const MemoryKernel& k) : dom(&d), kernel(&k) {
    for (const Deriv dv : active_derivs(d.dim()))
      if (k.active(dv))
        profiles[static_cast<int>(dv)] =
            make_field(d, [&](Point x) { return k.profile(dv)(x); });
  }

  void accumulate(const Field& v, double scale, Field& out) const {
    if (kernel->is_zero() || scale == 0.0) return;
    Field gv(v.size());
    for (const Deriv dv : active_derivs(dom->dim())) {
      if (!kernel->active(dv)) continue;
      const Field& g = profiles[static_cast<int>(dv)];
      for (std::size_t m = 0; m < v.size(); ++m) gv[m] = g[m] * v[m];
      const Field der = space_derivative(*dom, gv, dv);
      const double sign = (dv == Deriv::d1 || dv == Deriv::d2) ? -1.0 : 1.0;
      for (std::size_t m = 0; m < v.size(); ++m) out[m] += scale * sign * der[m];
    }
  }
};

std::vector<double> data_time_weights(int n_steps, double dt) {
  std::vector<double> w(n_steps + 1, dt);
  w.front() = 0.5 * dt;
  w.back() = 0.5 * dt;
  return w;
}

}  // namespace

void ObservationSetup::validate() const {
  if (coef.dim() != dom.dim() || kernel.dim() != dom.dim())
    throw std::invalid_argument("ObservationSetup: dimension mismatch");
  if (!(T > 0.0)) throw std::invalid_argument("ObservationSetup: T must be positive");
  if (gamma_ids.empty())
    throw std::invalid_argument("ObservationSetup: empty observation boundary");
  for (std::size_t id : gamma_ids)
    if (id >= dom.boundary().size())
      throw std::invalid_argument("ObservationSetup: boundary id out of range");
  if (!r.r) throw std::invalid_argument("ObservationSetup: source amplitude R missing");
  if (r_floor > 0.0) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < dom.num_nodes(); ++m)
      lo = std::min(lo, std::abs(r.r(dom.node(m), 0.0)));
    if (lo < r_floor)
      throw std::invalid_argument(
          "ObservationSetup: |R(.,0)| drops to " + std::to_string(lo) +
          ", below the declared floor " + std::to_string(r_floor));
  }
}

int ObservationSetup::resolved_steps() const {
  const double target = dt > 0.0 ? dt : cfl_limit(dom, coef);
  return std::max(1, static_cast<int>(std::ceil(T / target - 1e-9)));
}

double ObservationSetup::resolved_dt() const { return T / resolved_steps(); }

TraceOperator::TraceOperator(const Domain& dom, const CoefficientField& coef,
                             std::vector<std::size_t> gamma_ids)
    : ids_(std::move(gamma_ids)), n_nodes_(dom.num_nodes()) {
  const double h = dom.spacing();
  rows_.reserve(ids_.size());
  for (std::size_t id : ids_) {
    const BoundaryNode& bn = dom.boundary().at(id);
    int ix, iy;
    dom.unpack(bn.node, ix, iy);
    const Point xb = dom.node(bn.node);
    std::array<Entry, 2> row{};
    // One-sided second-order first derivative along the inward line; the
    // boundary node itself carries zero for Dirichlet fields. The channel is
    // (normal . coefficient row) times that derivative.
    int dx = 0, dy = 0;
    double c = 0.0;
    switch (bn.face) {
      case Face::x_lo: dx = 1; c = -coef.a11(xb); break;
      case Face::x_hi: dx = -1; c = coef.a11(xb); break;
      case Face::y_lo: dy = 1; c = -coef.a22(xb); break;
      case Face::y_hi: dy = -1; c = coef.a22(xb); break;
    }
    // Offsets 1 and 2 inward have stencil weights 2 and -1/2 (times the inward
    // direction sign embedded in dx, dy).
    const double sgn = (dx + dy) > 0 ? 1.0 : -1.0;
    const int ix1 = ix + dx, iy1 = iy + dy;
    const int ix2 = ix + 2 * dx, iy2 = iy + 2 * dy;
    if (!dom.on_boundary(ix1, iy1)) {
      row[0].node = dom.index(ix1, iy1);
      row[0].weight = c * sgn * 2.0 / h;
    }
    if (!dom.on_boundary(ix2, iy2)) {
      row[1].node = dom.index(ix2, iy2);
      row[1].weight = c * sgn * -0.5 / h;
    }
    rows_.push_back(row);
  }
}

std::vector<double> TraceOperator::apply(const Field& u) const {
  if (u.size() != n_nodes_) throw std::invalid_argument("TraceOperator: size mismatch");
  std::vector<double> out(rows_.size(), 0.0);
  for (std::size_t c = 0; c < rows_.size(); ++c)
    for (const Entry& e : rows_[c]) out[c] += e.weight * u[e.node];
  return out;
}

void TraceOperator::add_transpose(const std::vector<double>& channel_values,
                                  Field& acc) const {
  if (channel_values.size() != rows_.size() || acc.size() != n_nodes_)
    throw std::invalid_argument("TraceOperator: size mismatch");
  for (std::size_t c = 0; c < rows_.size(); ++c)
    for (const Entry& e : rows_[c]) acc[e.node] += e.weight * channel_values[c];
}

BoundaryTrace forward_map(const ObservationSetup& setup, const Field& f) {
  setup.validate();
  if (f.size() != setup.dom.num_nodes())
    throw std::invalid_argument("forward_map: source size mismatch");
  require_interior_support(setup.dom, f, "forward_map");

  ProblemSpec spec;
  spec.dom = setup.dom;
  spec.coef = setup.coef;
  spec.kernel = setup.kernel;
  spec.source.mode = SourceMode::separated;
  spec.source.r = setup.r;
  spec.source.f = f;
  spec.T = setup.T;
  spec.dt = setup.dt;
  const SimulationResult sim = simulate(spec);

  const TraceOperator trace_op(setup.dom, setup.coef, setup.gamma_ids);
  BoundaryTrace trace;
  trace.t0 = 0.0;
  trace.dt = sim.u.dt;
  trace.boundary_ids = setup.gamma_ids;
  for (std::size_t id : setup.gamma_ids)
    trace.weights.push_back(setup.dom.boundary()[id].weight);
  trace.values.reserve(sim.u.frames.size());
  for (const Field& frame : sim.u.frames) trace.values.push_back(trace_op.apply(frame));
  return trace;
}

Field adjoint_map(const ObservationSetup& setup, const BoundaryTrace& data) {
  setup.validate();
  const Domain& dom = setup.dom;
  const int n = setup.resolved_steps();
  const double dt = setup.resolved_dt();
  if (static_cast<int>(data.values.size()) != n + 1)
    throw std::invalid_argument("adjoint_map: frame count does not match the setup");
  if (data.boundary_ids != setup.gamma_ids)
    throw std::invalid_argument("adjoint_map: observation layout mismatch");

  const std::size_t n_nodes = dom.num_nodes();
  const TraceOperator trace_op(dom, setup.coef, setup.gamma_ids);
  const DiscreteOperator elliptic(dom, setup.coef);
  const HistoryTranspose history(dom, setup.kernel);
  const std::vector<double> tw = data_time_weights(n, dt);
  std::vector<double> arc(setup.gamma_ids.size());
  for (std::size_t c = 0; c < arc.size(); ++c)
    arc[c] = dom.boundary()[setup.gamma_ids[c]].weight;

  // gamma^k = G^T (weighted data frame k), the derivative of the data pairing.
  auto weighted_rhs = [&](int k) {
    Field g(n_nodes, 0.0);
    std::vector<double> row = data.values[k];
    for (std::size_t c = 0; c < row.size(); ++c) row[c] *= tw[k] * arc[c];
    trace_op.add_transpose(row, g);
    zero_boundary(dom, g);
    return g;
  };

  const KernelStructure structure = setup.kernel.structure();
  std::vector<Field> lambda(n + 1);  // lambda[m] is the multiplier, m = 1..n
  Field running(n_nodes, 0.0);       // reversed history sum for the fast paths
  const double decay = structure == KernelStructure::exponential
                           ? std::exp(-setup.kernel.lambda() * dt)
                           : 1.0;

  Field grad(n_nodes, 0.0);
  Field au(n_nodes, 0.0);
  for (int m = n; m >= 1; --m) {
    Field lam = weighted_rhs(m);
    if (m <= n - 1) {
      const Field& next = lambda[m + 1];
      elliptic.apply_interior(next, au);
      for (std::size_t i = 0; i < n_nodes; ++i)
        lam[i] += 2.0 * next[i] + dt * dt * au[i];
      if (m <= n - 2)
        for (std::size_t i = 0; i < n_nodes; ++i) lam[i] -= lambda[m + 2][i];

      if (!setup.kernel.is_zero()) {
        // rho^m = sum_{k=m}^{n-1} c_{km} kappa(t_k, t_m) lambda^{k+1},
        // c_{km} = dt (1/2 at k = m).
        Field rho(n_nodes, 0.0);
        switch (structure) {
          case KernelStructure::zero: break;
          case KernelStructure::stationary:
            for (std::size_t i = 0; i < n_nodes; ++i) {
              running[i] += next[i];
              rho[i] = dt * (running[i] - 0.5 * next[i]);
            }
            break;
          case KernelStructure::exponential:
            for (std::size_t i = 0; i < n_nodes; ++i) {
              running[i] = next[i] + decay * running[i];
              rho[i] = dt * (running[i] - 0.5 * next[i]);
            }
            break;
          case KernelStructure::separable: {
            const double tm = m * dt;
            for (int k = m; k <= n - 1; ++k) {
              const double w = dt * (k == m ? 0.5 : 1.0) *
                               setup.kernel.time_factor(k * dt, tm);
              const Field& lk = lambda[k + 1];
              for (std::size_t i = 0; i < n_nodes; ++i) rho[i] += w * lk[i];
            }
            break;
          }
        }
        history.accumulate(rho, dt * dt, lam);
      }
    }
    zero_boundary(dom, lam);
    lambda[m] = std::move(lam);

    // Source sensitivity: u^1 sees (dt^2/2) R(.,0) f, u^{k+1} sees dt^2 R(.,t_k) f.
    const double t_src = (m - 1) * dt;
    const double w_src = (m == 1) ? 0.5 * dt * dt : dt * dt;
    const Field& lm = lambda[m];
    for (std::size_t i = 0; i < n_nodes; ++i)
      if (lm[i] != 0.0) grad[i] += w_src * setup.r.r(dom.node(i), t_src) * lm[i];
  }

  const double hn = std::pow(dom.spacing(), dom.dim());
  for (double& v : grad) v /= hn;
  zero_boundary(dom, grad);
  return grad;
}

double trace_inner(const BoundaryTrace& a, const BoundaryTrace& b) {
  if (a.values.size() != b.values.size() || a.weights.size() != b.weights.size())
    throw std::invalid_argument("trace_inner: shape mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double tw = (k == 0 || k + 1 == a.values.size()) ? 0.5 * a.dt : a.dt;
    double frame = 0.0;
    for (std::size_t c = 0; c < a.weights.size(); ++c)
      frame += a.weights[c] * a.values[k][c] * b.values[k][c];
    acc += tw * frame;
  }
  return acc;
}

double trace_norm(const BoundaryTrace& a) { return std::sqrt(trace_inner(a, a)); }

DotTestReport adjoint_dot_test(const ObservationSetup& setup, std::uint64_t seed,
                               int n_pairs) {
  setup.validate();
  const Domain& dom = setup.dom;
  const int n = setup.resolved_steps();
  DotTestReport report;
  for (int pair = 0; pair < n_pairs; ++pair) {
    Rng rng(seed + pair);
    Field f(dom.num_nodes(), 0.0);
    for (std::size_t m = 0; m < f.size(); ++m)
      if (dom.is_interior(m)) f[m] = rng.normal();

    BoundaryTrace g;
    g.t0 = 0.0;
    g.dt = setup.resolved_dt();
    g.boundary_ids = setup.gamma_ids;
    for (std::size_t id : setup.gamma_ids)
      g.weights.push_back(dom.boundary()[id].weight);
    g.values.assign(n + 1, std::vector<double>(setup.gamma_ids.size()));
    for (auto& frame : g.values)
      for (double& v : frame) v = rng.normal();

    const BoundaryTrace af = forward_map(setup, f);
    const Field atg = adjoint_map(setup, g);
    const double lhs = trace_inner(af, g);
    const double rhs = inner_interior(dom, f, atg);
    const double rel =
        std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    report.per_pair.push_back(rel);
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  return report;
}

ReconstructionResult reconstruct(const ObservationSetup& setup, const BoundaryTrace& data,
                                 const ReconstructionOptions& opts) {
  setup.validate();
  const Domain& dom = setup.dom;
  const std::size_t n_nodes = dom.num_nodes();
  if (opts.alpha < 0.0) throw std::invalid_argument("reconstruct: alpha must be >= 0");

  ReconstructionResult out;
  out.f.assign(n_nodes, 0.0);
  const double data_norm = trace_norm(data);
  if (data_norm == 0.0) {
    out.converged = true;
    return out;
  }

  // CGLS on min |A f - d|^2 + alpha |f|^2: the augmented least-squares
  // objective decreases monotonically over the Krylov iterates.
  Field x = opts.start ? *opts.start : Field(n_nodes, 0.0);
  if (x.size() != n_nodes) throw std::invalid_argument("reconstruct: start size mismatch");
  zero_boundary(dom, x);

  auto record = [&](const BoundaryTrace& resid) {
    const double misfit_sq =
        trace_inner(resid, resid) + opts.alpha * inner_interior(dom, x, x);
    out.residual_history.push_back(std::sqrt(std::max(misfit_sq, 0.0)) / data_norm);
    if (opts.truth) {
      Field diff = x;
      for (std::size_t m = 0; m < n_nodes; ++m) diff[m] -= (*opts.truth)[m];
      const double denom = std::max(norm_l2_interior(dom, *opts.truth), 1e-300);
      out.error_history.push_back(norm_l2_interior(dom, diff) / denom);
    }
  };

  BoundaryTrace r = data;
  {
    const BoundaryTrace ax = forward_map(setup, x);
    for (std::size_t k = 0; k < r.values.size(); ++k)
      for (std::size_t c = 0; c < r.values[k].size(); ++c)
        r.values[k][c] -= ax.values[k][c];
  }
  Field s = adjoint_map(setup, r);
  if (opts.alpha > 0.0)
    for (std::size_t m = 0; m < n_nodes; ++m) s[m] -= opts.alpha * x[m];
  Field p = s;
  double gamma = inner_interior(dom, s, s);
  const double gamma0 = gamma;
  record(r);

  for (int it = 0; it < opts.max_iters; ++it) {
    if (gamma <= opts.tol * opts.tol * std::max(gamma0, 1e-300)) {
      out.converged = true;
      break;
    }
    const BoundaryTrace q = forward_map(setup, p);
    const double delta = trace_inner(q, q) + opts.alpha * inner_interior(dom, p, p);
    if (delta <= 0.0) break;
    const double step = gamma / delta;
    for (std::size_t m = 0; m < n_nodes; ++m) x[m] += step * p[m];
    for (std::size_t k = 0; k < r.values.size(); ++k)
      for (std::size_t c = 0; c < r.values[k].size(); ++c)
        r.values[k][c] -= step * q.values[k][c];
    s = adjoint_map(setup, r);
    if (opts.alpha > 0.0)
      for (std::size_t m = 0; m < n_nodes; ++m) s[m] -= opts.alpha * x[m];
    const double gamma_new = inner_interior(dom, s, s);
    const double beta = gamma_new / gamma;
    for (std::size_t m = 0; m < n_nodes; ++m) p[m] = s[m] + beta * p[m];
    gamma = gamma_new;
    out.iterations = it + 1;
    record(r);
  }
  if (!out.converged && gamma <= opts.tol * opts.tol * std::max(gamma0, 1e-300))
    out.converged = true;

  out.f = std::move(x);
  out.data_misfit = std::sqrt(std::max(trace_inner(r, r), 0.0)) / data_norm;
  return out;
}

FieldSampler sine_sampler(int kmax, int window_pow, double amplitude) {
  return [kmax, window_pow, amplitude](const Domain& dom, Rng& rng) {
    SineSeries s = random_sine_series(rng, dom, kmax, window_pow);
    s.amplitude = amplitude;
    return make_field(dom, [&](Point x) { return s(x); });
  };
}

namespace {

struct TraceNormPair {
  double gamma_sq = 0.0;
  double full_sq = 0.0;
};

// L2(0,T) x weighted-boundary squared norms of one solution's conormal trace,
// split into the observation subset and the full boundary.
TraceNormPair split_trace_norms(const SimulationResult& sim,
                                const std::vector<bool>& in_gamma) {
  const BoundaryTrace trace = conormal_trace(sim, {});
  TraceNormPair out;
  for (std::size_t k = 0; k < trace.values.size(); ++k) {
    const double tw = (k == 0 || k + 1 == trace.values.size()) ? 0.5 * trace.dt : trace.dt;
    for (std::size_t c = 0; c < trace.values[k].size(); ++c) {
      const double add = tw * trace.weights[c] * trace.values[k][c] * trace.values[k][c];
      out.full_sq += add;
      if (in_gamma[c]) out.gamma_sq += add;
    }
  }
  return out;
}

StabilityEnsembleReport finalize_report(std::vector<StabilitySample> samples) {
  StabilityEnsembleReport report;
  report.samples = std::move(samples);
  bool first = true;
  for (const StabilitySample& s : report.samples) {
    if (s.source_norm == 0.0) continue;
    if (first) {
      report.min_upper = report.max_upper = s.upper_ratio;
      report.min_lower = report.max_lower = s.lower_ratio;
      report.min_visibility = report.max_visibility = s.visibility;
      first = false;
      continue;
    }
    report.min_upper = std::min(report.min_upper, s.upper_ratio);
    report.max_upper = std::max(report.max_upper, s.upper_ratio);
    report.min_lower = std::min(report.min_lower, s.lower_ratio);
    report.max_lower = std::max(report.max_lower, s.lower_ratio);
    report.min_visibility = std::min(report.min_visibility, s.visibility);
    report.max_visibility = std::max(report.max_visibility, s.visibility);
  }
  report.spread_upper =
      report.min_upper > 0.0 ? report.max_upper / report.min_upper : 0.0;
  report.spread_lower =
      report.min_lower > 0.0 ? report.max_lower / report.min_lower : 0.0;
  return report;
}

std::vector<bool> gamma_mask(const Domain& dom, const std::vector<std::size_t>& ids) {
  std::vector<bool> mask(dom.boundary().size(), false);
  for (std::size_t id : ids) mask.at(id) = true;
  return mask;
}

}  // namespace

StabilityEnsembleReport observability_sweep(const ObservationSetup& setup,
                                            std::uint64_t seed, int n_samples,
                                            const FieldSampler& sampler) {
  setup.validate();
  const Domain& dom = setup.dom;
  const std::vector<bool> mask = gamma_mask(dom, setup.gamma_ids);
  std::vector<StabilitySample> samples;
  for (int i = 0; i < n_samples; ++i) {
    Rng rng(seed + i);
    const Field a = sampler(dom, rng);
    StabilitySample s;
    s.seed = seed + i;
    const double a_h3 = std::sqrt(sobolev_norm_sq(dom, a, 3));
    if (a_h3 <= 0.0) {
      samples.push_back(s);
      continue;
    }
    ProblemSpec spec;
    spec.dom = dom;
    spec.coef = setup.coef;
    spec.kernel = setup.kernel;
    spec.u0 = a;
    spec.T = setup.T;
    spec.dt = setup.dt;

    double gamma_sq = 0.0, full_sq = 0.0;
    for (int level = 0; level <= 2; ++level) {
      const SimulationResult sim =
          level == 0 ? simulate(spec) : derivative_system_simulate(spec, level);
      const TraceNormPair pair = split_trace_norms(sim, mask);
      gamma_sq += pair.gamma_sq;
      full_sq += pair.full_sq;
    }
    s.source_norm = a_h3;
    s.trace_gamma = std::sqrt(gamma_sq);
    s.trace_full = std::sqrt(full_sq);
    s.upper_ratio = s.source_norm / std::max(s.trace_gamma, 1e-300);
    s.lower_ratio = s.trace_full / s.source_norm;
    s.visibility = s.trace_gamma / s.source_norm;
    samples.push_back(s);
  }
  return finalize_report(std::move(samples));
}

StabilityEnsembleReport lipschitz_sweep(const ObservationSetup& setup, std::uint64_t seed,
                                        int n_samples, const FieldSampler& sampler) {
  setup.validate();
  const Domain& dom = setup.dom;
  const std::vector<bool> mask = gamma_mask(dom, setup.gamma_ids);
  std::vector<StabilitySample> samples;
  for (int i = 0; i < n_samples; ++i) {
    Rng rng(seed + i);
    const Field f = sampler(dom, rng);
    StabilitySample s;
    s.seed = seed + i;
    const double f_h2 = std::sqrt(sobolev_norm_sq(dom, f, 2));
    if (f_h2 <= 0.0) {
      samples.push_back(s);
      continue;
    }
    ProblemSpec spec;
    spec.dom = dom;
    spec.coef = setup.coef;
    spec.kernel = setup.kernel;
    spec.source.mode = SourceMode::separated;
    spec.source.r = setup.r;
    spec.source.f = f;
    spec.T = setup.T;
    spec.dt = setup.dt;

    double gamma_sq = 0.0, full_sq = 0.0;
    for (int level = 0; level <= 3; ++level) {
      const SimulationResult sim =
          level == 0 ? simulate(spec) : derivative_system_simulate(spec, level);
      const TraceNormPair pair = split_trace_norms(sim, mask);
      gamma_sq += pair.gamma_sq;
      full_sq += pair.full_sq;
    }
    s.source_norm = f_h2;
    s.trace_gamma = std::sqrt(gamma_sq);
    s.trace_full = std::sqrt(full_sq);
    s.upper_ratio = s.source_norm / std::max(s.trace_gamma, 1e-300);
    s.lower_ratio = s.trace_full / s.source_norm;
    s.visibility = s.trace_gamma / s.source_norm;
    samples.push_back(s);
  }
  return finalize_report(std::move(samples));
}

double endpoint_drift(const StabilityEnsembleReport& a, const StabilityEnsembleReport& b) {
  const double pairs[4][2] = {{a.min_upper, b.min_upper},
                              {a.max_upper, b.max_upper},
                              {a.min_lower, b.min_lower},
                              {a.max_lower, b.max_lower}};
  double drift = 0.0;
  for (const auto& p : pairs)
    drift = std::max(drift, std::abs(p[1] - p[0]) / std::max(std::abs(p[0]), 1e-300));
  return drift;
}

BoundaryTrace restrict_trace(const BoundaryTrace& fine, const Domain& fine_dom,
                             const Domain& coarse_dom, const CoefficientField& coef,
                             const std::vector<std::size_t>& coarse_ids) {
  (void)coef;
  if ((fine.values.size() - 1) % 2 != 0)
    throw std::invalid_argument("restrict_trace: fine trace needs an even step count");

  // Match fine channels to the coarse observation nodes by position.
  std::vector<std::size_t> channel_of(coarse_ids.size());
  for (std::size_t c = 0; c < coarse_ids.size(); ++c) {
    const Point xc = coarse_dom.node(coarse_dom.boundary().at(coarse_ids[c]).node);
    bool found = false;
    for (std::size_t fc = 0; fc < fine.boundary_ids.size(); ++fc) {
      const Point xf = fine_dom.node(fine_dom.boundary().at(fine.boundary_ids[fc]).node);
      if (std::abs(xf[0] - xc[0]) < 1e-12 && std::abs(xf[1] - xc[1]) < 1e-12) {
        channel_of[c] = fc;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::invalid_argument("restrict_trace: no fine channel at a coarse position");
  }

  BoundaryTrace out;
  out.t0 = fine.t0;
  out.dt = 2.0 * fine.dt;
  out.boundary_ids = coarse_ids;
  for (std::size_t id : coarse_ids)
    out.weights.push_back(coarse_dom.boundary().at(id).weight);
  for (std::size_t k = 0; k < fine.values.size(); k += 2) {
    std::vector<double> frame(coarse_ids.size());
    for (std::size_t c = 0; c < coarse_ids.size(); ++c)
      frame[c] = fine.values[k][channel_of[c]];
    out.values.push_back(std::move(frame));
  }
  return out;
}

}  // namespace carleman
