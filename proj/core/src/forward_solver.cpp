#include "carleman/forward_solver.hpp"

#include "carleman/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace carleman {

namespace {

bool field_is_zero(const Field& f) {
  for (double v : f)
    if (v != 0.0) return false;
  return true;
}

void require_dirichlet(const Domain& dom, const Field& f, const char* what) {
  double scale = 1.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  for (const BoundaryNode& bn : dom.boundary())
    if (std::abs(f[bn.node]) > 1e-12 * scale)
      throw std::invalid_argument(std::string("simulate: ") + what +
                                  " must vanish on the boundary");
}

// Incremental memory-term evaluator. Reproduces apply_memory() step by step.
struct MemoryState {
  const MemoryKernel* kernel = nullptr;
  const Domain* dom = nullptr;
  std::array<Field, kNumDeriv> profiles;  // nodal samples of active g_alpha
  Field accum;                            // running weighted history integral
  double decay = 1.0;                     // exp(-lambda dt) for the exponential path

  MemoryState(const MemoryKernel& k, const Domain& d) : kernel(&k), dom(&d) {
    for (const Deriv dv : active_derivs(d.dim()))
      if (k.active(dv))
        profiles[static_cast<int>(dv)] =
            make_field(d, [&](Point x) { return k.profile(dv)(x); });
    accum = zero_field(d);
  }

  // Memory term at frame `step` given all frames up to `step`.
  Field eval(const SpaceTimeField& u, int step) {
    Field out(u.frames[0].size(), 0.0);
    if (kernel->is_zero() || step == 0) return out;
    const double dt = u.dt;
    switch (kernel->structure()) {
      case KernelStructure::zero:
        return out;
      case KernelStructure::stationary: {
        const Field& prev = u.frames[step - 1];
        const Field& cur = u.frames[step];
        for (std::size_t m = 0; m < accum.size(); ++m)
          accum[m] += 0.5 * dt * (prev[m] + cur[m]);
        return combine(accum);
      }
      case KernelStructure::exponential: {
        decay = std::exp(-kernel->lambda() * dt);
        const Field& prev = u.frames[step - 1];
        const Field& cur = u.frames[step];
        for (std::size_t m = 0; m < accum.size(); ++m)
          accum[m] = decay * (accum[m] + 0.5 * dt * prev[m]) + 0.5 * dt * cur[m];
        return combine(accum);
      }
      case KernelStructure::separable: {
        const double t = u.time(step);
        Field weighted(accum.size(), 0.0);
        for (int j = 0; j <= step; ++j) {
          const double w =
              (j == 0 || j == step ? 0.5 : 1.0) * dt * kernel->time_factor(t, u.time(j));
          const Field& frame = u.frames[j];
          for (std::size_t m = 0; m < weighted.size(); ++m) weighted[m] += w * frame[m];
        }
        return combine(weighted);
      }
    }
    return out;
  }

  Field combine(const Field& weighted) const {
    Field out(weighted.size(), 0.0);
    for (const Deriv dv : active_derivs(dom->dim())) {
      if (!kernel->active(dv)) continue;
      const Field der = space_derivative(*dom, weighted, dv);
      const Field& g = profiles[static_cast<int>(dv)];
      for (std::size_t m = 0; m < out.size(); ++m) out[m] += g[m] * der[m];
    }
    return out;
  }
};

void check_finite(const Field& f, int step) {
  for (double v : f)
    if (!std::isfinite(v))
      throw std::runtime_error("simulate: non-finite value at step " + std::to_string(step) +
                               " (check the CFL margin and the kernel magnitude)");
}

}  // namespace

TimeCoefficient TimeCoefficient::one() {
  TimeCoefficient c;
  c.r = [](Point, double) { return 1.0; };
  c.rt = [](Point, double) { return 0.0; };
  c.rtt = [](Point, double) { return 0.0; };
  c.rttt = [](Point, double) { return 0.0; };
  return c;
}

TimeCoefficient TimeCoefficient::cosine(double amp, std::function<double(Point)> g) {
  TimeCoefficient c;
  c.r = [amp, g](Point x, double t) { return 1.0 + amp * std::cos(t) * g(x); };
  c.rt = [amp, g](Point x, double t) { return -amp * std::sin(t) * g(x); };
  c.rtt = [amp, g](Point x, double t) { return -amp * std::cos(t) * g(x); };
  c.rttt = [amp, g](Point x, double t) { return amp * std::sin(t) * g(x); };
  return c;
}

DiscreteOperator::DiscreteOperator(const Domain& dom, const CoefficientField& coef)
    : dom_(dom) {
  a11_ = make_field(dom, [&](Point x) { return coef.a11(x); });
  if (dom.dim() == 2) {
    a12_ = make_field(dom, [&](Point x) { return coef.a12(x); });
    a22_ = make_field(dom, [&](Point x) { return coef.a22(x); });
  }
}

void DiscreteOperator::apply_interior(const Field& u, Field& out) const {
  const double h2 = dom_.spacing() * dom_.spacing();
  if (dom_.dim() == 1) {
    const int nx = dom_.cells(0);
    out[0] = 0.0;
    out[nx] = 0.0;
    for (int i = 1; i < nx; ++i) {
      const double fp = 0.5 * (a11_[i] + a11_[i + 1]);
      const double fm = 0.5 * (a11_[i - 1] + a11_[i]);
      out[i] = (fp * (u[i + 1] - u[i]) - fm * (u[i] - u[i - 1])) / h2;
    }
    return;
  }
  const int nx = dom_.cells(0), ny = dom_.cells(1);
  const std::size_t row = nx + 1;
  std::fill(out.begin(), out.end(), 0.0);
  for (int iy = 1; iy < ny; ++iy) {
    for (int ix = 1; ix < nx; ++ix) {
      const std::size_t c = iy * row + ix;
      const double diag_x = 0.5 * (a11_[c] + a11_[c + 1]) * (u[c + 1] - u[c]) -
                            0.5 * (a11_[c - 1] + a11_[c]) * (u[c] - u[c - 1]);
      const double diag_y = 0.5 * (a22_[c] + a22_[c + row]) * (u[c + row] - u[c]) -
                            0.5 * (a22_[c - row] + a22_[c]) * (u[c] - u[c - row]);
      const double cross = a12_[c + 1] * (u[c + 1 + row] - u[c + 1 - row]) -
                           a12_[c - 1] * (u[c - 1 + row] - u[c - 1 - row]) +
                           a12_[c + row] * (u[c + row + 1] - u[c + row - 1]) -
                           a12_[c - row] * (u[c - row + 1] - u[c - row - 1]);
      out[c] = (diag_x + diag_y) / h2 + cross / (4.0 * h2);
    }
  }
}

double cfl_limit(const Domain& dom, const CoefficientField& coef) {
  double rho = 0.0;
  for (std::size_t idx = 0; idx < dom.num_nodes(); ++idx)
    rho = std::max(rho, coef.spectral_radius(dom.node(idx)));
  if (!(rho > 0.0)) throw std::invalid_argument("cfl_limit: degenerate coefficients");
  return 0.5 * dom.spacing() / std::sqrt(rho);
}

Field apply_operator_a(const Domain& dom, const CoefficientField& coef, const Field& u,
                       bool include_boundary) {
  if (u.size() != dom.num_nodes())
    throw std::invalid_argument("apply_operator_a: field size mismatch");
  Field out(u.size(), 0.0);
  const DiscreteOperator op(dom, coef);
  op.apply_interior(u, out);
  if (!include_boundary) return out;

  const double fd_step = 1e-4 * dom.diameter();
  const Field d1 = axis_derivative(dom, u, 0, 1);
  const Field d11 = axis_derivative(dom, u, 0, 2);
  Field d2, d22, d12;
  if (dom.dim() == 2) {
    d2 = axis_derivative(dom, u, 1, 1);
    d22 = axis_derivative(dom, u, 1, 2);
    d12 = axis_derivative(dom, axis_derivative(dom, u, 0, 1), 1, 1);
  }
  for (const BoundaryNode& bn : dom.boundary()) {
    const std::size_t m = bn.node;
    const Point x = dom.node(m);
    if (dom.dim() == 1) {
      out[m] = coef.a11(x) * d11[m] + coef.entry_derivative(0, 0, 0, x, fd_step) * d1[m];
    } else {
      const double div1 = coef.entry_derivative(0, 0, 0, x, fd_step) +
                          coef.entry_derivative(1, 0, 1, x, fd_step);
      const double div2 = coef.entry_derivative(0, 0, 1, x, fd_step) +
                          coef.entry_derivative(1, 1, 1, x, fd_step);
      out[m] = coef.a11(x) * d11[m] + 2.0 * coef.a12(x) * d12[m] + coef.a22(x) * d22[m] +
               div1 * d1[m] + div2 * d2[m];
    }
  }
  return out;
}

SimulationResult simulate(const ProblemSpec& spec) {
  const Domain& dom = spec.dom;
  if (spec.coef.dim() != dom.dim())
    throw std::invalid_argument("simulate: coefficient dimension mismatch");
  if (spec.kernel.dim() != dom.dim())
    throw std::invalid_argument("simulate: kernel dimension mismatch");
  if (!(spec.T > 0.0)) throw std::invalid_argument("simulate: T must be positive");

  SimulationResult result;
  result.coef = spec.coef;
  result.mu0 = spec.coef.validate(dom);
  result.cfl_dt = cfl_limit(dom, spec.coef);

  double dt_target = spec.dt > 0.0 ? spec.dt : result.cfl_dt;
  if (dt_target > result.cfl_dt * (1.0 + 1e-9))
    throw std::invalid_argument("simulate: dt exceeds the CFL limit");
  const int n_steps = std::max(1, static_cast<int>(std::ceil(spec.T / dt_target - 1e-9)));
  const double dt = spec.T / n_steps;

  const std::size_t n_nodes = dom.num_nodes();
  Field u0 = spec.u0.empty() ? Field(n_nodes, 0.0) : spec.u0;
  Field v0 = spec.v0.empty() ? Field(n_nodes, 0.0) : spec.v0;
  if (u0.size() != n_nodes || v0.size() != n_nodes)
    throw std::invalid_argument("simulate: initial data size mismatch");
  require_dirichlet(dom, u0, "initial value");
  require_dirichlet(dom, v0, "initial velocity");

  auto source_at = [&](double t) -> Field {
    switch (spec.source.mode) {
      case SourceMode::none: return Field(n_nodes, 0.0);
      case SourceMode::general: {
        if (!spec.source.general)
          throw std::invalid_argument("simulate: general source callable missing");
        Field f = spec.source.general(dom, t);
        if (f.size() != n_nodes)
          throw std::invalid_argument("simulate: source field size mismatch");
        return f;
      }
      case SourceMode::separated: {
        if (!spec.source.r.r || spec.source.f.size() != n_nodes)
          throw std::invalid_argument("simulate: separated source requires R and f");
        Field f(n_nodes);
        for (std::size_t m = 0; m < n_nodes; ++m)
          f[m] = spec.source.r.r(dom.node(m), t) * spec.source.f[m];
        return f;
      }
    }
    return Field(n_nodes, 0.0);
  };

  const DiscreteOperator elliptic(dom, spec.coef);
  MemoryState memory(spec.kernel, dom);

  SpaceTimeField& u = result.u;
  u.dom = dom;
  u.t0 = 0.0;
  u.dt = dt;
  u.frames.reserve(n_steps + 1);
  u.frames.push_back(u0);

  Field au(n_nodes, 0.0);
  elliptic.apply_interior(u0, au);
  const Field f0 = source_at(0.0);
  Field first(n_nodes, 0.0);
  for (std::size_t m = 0; m < n_nodes; ++m)
    first[m] = u0[m] + dt * v0[m] + 0.5 * dt * dt * (au[m] + f0[m]);
  for (const BoundaryNode& bn : dom.boundary()) first[bn.node] = 0.0;
  u.frames.push_back(std::move(first));

  for (int k = 1; k < n_steps; ++k) {
    elliptic.apply_interior(u.frames[k], au);
    const Field mem = memory.eval(u, k);
    const Field fk = source_at(u.time(k));
    Field next(n_nodes, 0.0);
    const Field& cur = u.frames[k];
    const Field& prev = u.frames[k - 1];
    for (std::size_t m = 0; m < n_nodes; ++m)
      next[m] = 2.0 * cur[m] - prev[m] + dt * dt * (au[m] + mem[m] + fk[m]);
    for (const BoundaryNode& bn : dom.boundary()) next[bn.node] = 0.0;
    if (k % 32 == 0) check_finite(next, k);
    u.frames.push_back(std::move(next));
  }
  check_finite(u.frames.back(), n_steps);
  return result;
}

std::vector<double> conormal_values(const Domain& dom, const CoefficientField& coef,
                                    const Field& u,
                                    const std::vector<std::size_t>& boundary_ids) {
  const Field d1 = axis_derivative(dom, u, 0, 1);
  Field d2;
  if (dom.dim() == 2) d2 = axis_derivative(dom, u, 1, 1);
  const auto& bnodes = dom.boundary();
  std::vector<std::size_t> ids = boundary_ids;
  if (ids.empty()) {
    ids.resize(bnodes.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  }
  std::vector<double> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const BoundaryNode& bn = bnodes.at(ids[i]);
    const Point x = dom.node(bn.node);
    const double g1 = d1[bn.node];
    const double g2 = dom.dim() == 2 ? d2[bn.node] : 0.0;
    out[i] = bn.normal[0] * (coef.a11(x) * g1 + coef.a12(x) * g2) +
             bn.normal[1] * (coef.a12(x) * g1 + coef.a22(x) * g2);
  }
  return out;
}

BoundaryTrace conormal_trace(const SimulationResult& result,
                             const std::vector<std::size_t>& boundary_ids) {
  const Domain& dom = result.u.dom;
  const auto& bnodes = dom.boundary();
  BoundaryTrace trace;
  trace.t0 = result.u.t0;
  trace.dt = result.u.dt;
  trace.boundary_ids = boundary_ids;
  if (trace.boundary_ids.empty()) {
    trace.boundary_ids.resize(bnodes.size());
    for (std::size_t i = 0; i < bnodes.size(); ++i) trace.boundary_ids[i] = i;
  }
  trace.weights.reserve(trace.boundary_ids.size());
  for (std::size_t id : trace.boundary_ids) trace.weights.push_back(bnodes.at(id).weight);
  trace.values.resize(result.u.frames.size());
  parallel_for(result.u.frames.size(), [&](std::size_t k) {
    trace.values[k] =
        conormal_values(dom, result.coef, result.u.frames[k], trace.boundary_ids);
  });
  return trace;
}

SimulationResult even_extend(const SimulationResult& result, double tol) {
  const SpaceTimeField& u = result.u;
  if (u.steps() < 2) throw std::invalid_argument("even_extend: too few frames");
  double scale = 0.0, resid = 0.0;
  for (const Field& f : u.frames) scale = std::max(scale, norm_linf(f));
  const Field& f0 = u.frames[0];
  const Field& f1 = u.frames[1];
  const Field& f2 = u.frames[2];
  for (std::size_t m = 0; m < f0.size(); ++m)
    resid = std::max(resid,
                     std::abs((-3.0 * f0[m] + 4.0 * f1[m] - f2[m]) / (2.0 * u.dt)));
  if (resid > tol * std::max(scale, 1e-300))
    throw std::invalid_argument(
        "even_extend: initial velocity is not numerically zero (residual " +
        std::to_string(resid) + ")");

  SimulationResult out = result;
  SpaceTimeField& v = out.u;
  const int n = u.steps();
  v.t0 = -u.dt * n;
  v.frames.assign(2 * n + 1, Field());
  for (int k = 0; k <= n; ++k) {
    v.frames[n + k] = u.frames[k];
    v.frames[n - k] = u.frames[k];
  }
  return out;
}

SimulationResult derivative_system_simulate(const ProblemSpec& spec, int level) {
  if (level < 1 || level > 3)
    throw std::invalid_argument("derivative_system_simulate: level must be 1, 2 or 3");
  const Domain& dom = spec.dom;
  const std::size_t n_nodes = dom.num_nodes();
  const bool zero_u0 = spec.u0.empty() || field_is_zero(spec.u0);
  const bool zero_v0 = spec.v0.empty() || field_is_zero(spec.v0);

  const double dt_eff = spec.dt > 0.0 ? spec.dt : cfl_limit(dom, spec.coef);
  const int table_steps = std::max(128, 2 * static_cast<int>(std::ceil(spec.T / dt_eff)));
  const MemoryKernel lifted = lift(spec.kernel, level, spec.T, table_steps);
  const MemoryKernel lifted1 = lift(spec.kernel, 1, spec.T, table_steps);
  const MemoryKernel lifted3 = lift(spec.kernel, 3, spec.T, table_steps);

  ProblemSpec sys = spec;
  sys.kernel = lifted;

  if (spec.source.mode == SourceMode::separated && zero_u0 && zero_v0) {
    const TimeCoefficient& r = spec.source.r;
    if (!r.r || !r.rt || (level >= 2 && !r.rtt) || (level >= 3 && !r.rttt))
      throw std::invalid_argument(
          "derivative_system_simulate: source time derivatives up to the level are required");
    const Field& f = spec.source.f;
    if (f.size() != n_nodes)
      throw std::invalid_argument("derivative_system_simulate: source profile size mismatch");

    Field r0f(n_nodes), rt0f(n_nodes), rtt0f(n_nodes);
    for (std::size_t m = 0; m < n_nodes; ++m) {
      const Point x = dom.node(m);
      r0f[m] = r.r(x, 0.0) * f[m];
      rt0f[m] = r.rt(x, 0.0) * f[m];
      rtt0f[m] = r.rtt(x, 0.0) * f[m];
    }

    if (level == 1) {
      sys.u0 = Field(n_nodes, 0.0);
      sys.v0 = r0f;
      sys.source.mode = SourceMode::general;
      sys.source.general = [r, f](const Domain& d, double t) {
        Field out(f.size());
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = r.rt(d.node(m), t) * f[m];
        return out;
      };
    } else if (level == 2) {
      sys.u0 = r0f;
      sys.v0 = rt0f;
      sys.source.mode = SourceMode::general;
      sys.source.general = [r, f](const Domain& d, double t) {
        Field out(f.size());
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = r.rtt(d.node(m), t) * f[m];
        return out;
      };
    } else {
      // dt^3 system: extra memory-diagonal source and the operator term in the
      // initial velocity.
      Field h(n_nodes, 0.0);
      for (const Deriv dv : active_derivs(dom.dim())) {
        if (!spec.kernel.active(dv)) continue;
        const Field der = space_derivative(dom, r0f, dv);
        const auto& g = spec.kernel.profile(dv);
        for (std::size_t m = 0; m < n_nodes; ++m) h[m] += g(dom.node(m)) * der[m];
      }
      sys.u0 = rt0f;
      Field a_r0f = apply_operator_a(dom, spec.coef, r0f);
      sys.v0 = Field(n_nodes, 0.0);
      for (std::size_t m = 0; m < n_nodes; ++m) sys.v0[m] = a_r0f[m] + rtt0f[m];
      const MemoryKernel k3 = lifted3;
      sys.source.mode = SourceMode::general;
      sys.source.general = [r, f, h, k3](const Domain& d, double t) {
        const double c = k3.time_factor(t, 0.0);
        Field out(f.size());
        for (std::size_t m = 0; m < out.size(); ++m)
          out[m] = r.rttt(d.node(m), t) * f[m] + c * h[m];
        return out;
      };
    }
  } else if (spec.source.mode == SourceMode::none && !zero_u0 && zero_v0) {
    const Field& a = spec.u0;
    Field h1(n_nodes, 0.0);  // sum_alpha g_alpha d^alpha a
    for (const Deriv dv : active_derivs(dom.dim())) {
      if (!spec.kernel.active(dv)) continue;
      const Field der = space_derivative(dom, a, dv);
      const auto& g = spec.kernel.profile(dv);
      for (std::size_t m = 0; m < n_nodes; ++m) h1[m] += g(dom.node(m)) * der[m];
    }
    const Field a_a = apply_operator_a(dom, spec.coef, a, true);
    const MemoryKernel k1 = lifted1;

    if (level == 1) {
      sys.u0 = Field(n_nodes, 0.0);
      sys.v0 = a_a;
      for (const BoundaryNode& bn : dom.boundary()) sys.v0[bn.node] = 0.0;
      sys.source.mode = SourceMode::general;
      sys.source.general = [h1, k1](const Domain&, double t) {
        const double c = k1.time_factor(t, 0.0);
        Field out(h1.size());
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = c * h1[m];
        return out;
      };
    } else if (level == 2) {
      sys.u0 = a_a;
      for (const BoundaryNode& bn : dom.boundary()) sys.u0[bn.node] = 0.0;
      const double c0 = spec.kernel.time_factor(0.0, 0.0);
      sys.v0 = Field(n_nodes, 0.0);
      for (std::size_t m = 0; m < n_nodes; ++m) sys.v0[m] = c0 * h1[m];
      for (const BoundaryNode& bn : dom.boundary()) sys.v0[bn.node] = 0.0;
      sys.source.mode = SourceMode::general;
      sys.source.general = [h1, k1](const Domain&, double t) {
        const double c = k1.time_factor_dt(t, 0.0);
        Field out(h1.size());
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = c * h1[m];
        return out;
      };
    } else {
      Field h2(n_nodes, 0.0);  // sum_alpha g_alpha d^alpha (A a)
      for (const Deriv dv : active_derivs(dom.dim())) {
        if (!spec.kernel.active(dv)) continue;
        const Field der = space_derivative(dom, a_a, dv);
        const auto& g = spec.kernel.profile(dv);
        for (std::size_t m = 0; m < n_nodes; ++m) h2[m] += g(dom.node(m)) * der[m];
      }
      const double c0 = spec.kernel.time_factor(0.0, 0.0);
      sys.u0 = Field(n_nodes, 0.0);
      for (std::size_t m = 0; m < n_nodes; ++m) sys.u0[m] = c0 * h1[m];
      for (const BoundaryNode& bn : dom.boundary()) sys.u0[bn.node] = 0.0;
      const Field a_aa = apply_operator_a(dom, spec.coef, a_a);
      const double c1 = k1.time_factor_dt(0.0, 0.0);
      sys.v0 = Field(n_nodes, 0.0);
      for (std::size_t m = 0; m < n_nodes; ++m) sys.v0[m] = a_aa[m] + c1 * h1[m];
      for (const BoundaryNode& bn : dom.boundary()) sys.v0[bn.node] = 0.0;
      const MemoryKernel k3 = lifted3;
      sys.source.mode = SourceMode::general;
      sys.source.general = [h1, h2, k1, k3](const Domain&, double t) {
        const double c_a = k1.time_factor_dtt(t, 0.0);
        const double c_b = k3.time_factor(t, 0.0);
        Field out(h1.size());
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = c_a * h1[m] + c_b * h2[m];
        return out;
      };
    }
  } else {
    throw std::invalid_argument(
        "derivative_system_simulate: expected either a separated source with zero initial "
        "data or a source-free problem with initial value data");
  }
  return simulate(sys);
}

}  // namespace carleman
