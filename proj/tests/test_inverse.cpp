#include "carleman/inverse.hpp"

#include "carleman/fields.hpp"
#include "carleman/forward_solver.hpp"
#include "carleman/geometry.hpp"
#include "carleman/memory_kernel.hpp"
#include "carleman/norms.hpp"
#include "carleman/random.hpp"
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

using namespace carleman;

namespace {

constexpr Point kX0{-0.5, 0.5};

Domain unit_square(double h) { return Domain(2, Point{0.0, 0.0}, Point{1.0, 1.0}, h); }
Domain unit_line(double h) { return Domain(1, Point{0.0, 0.0}, Point{1.0, 0.0}, h); }

Field windowed_bump(const Domain& dom, double amp) {
  return make_field(dom, [&](Point p) {
    double v = amp;
    for (int ax = 0; ax < dom.dim(); ++ax) {
      const double s = (p[ax] - dom.lower()[ax]) / (dom.upper()[ax] - dom.lower()[ax]);
      const double w = 4.0 * s * (1.0 - s);
      v *= w * w;
    }
    return v;
  });
}

MemoryKernel::ProfileArray value_profile(double c) {
  MemoryKernel::ProfileArray p{};
  p[static_cast<int>(Deriv::value)] = [c](Point) { return c; };
  return p;
}

double rel_l2_diff(const Domain& dom, const Field& a, const Field& b) {
  Field diff = a;
  for (std::size_t m = 0; m < diff.size(); ++m) diff[m] -= b[m];
  return norm_l2_interior(dom, diff) / std::max(norm_l2_interior(dom, b), 1e-300);
}

ObservationSetup line_setup(double h, double T) {
  ObservationSetup setup;
  setup.dom = unit_line(h);
  setup.coef = CoefficientField::identity(1);
  setup.kernel = MemoryKernel::zero(1);
  setup.r = TimeCoefficient::one();
  setup.T = T;
  setup.gamma_ids = {0, 1};
  return setup;
}

ObservationSetup square_setup(double h, double T) {
  ObservationSetup setup;
  setup.dom = unit_square(h);
  setup.coef = CoefficientField::identity(2);
  setup.kernel = MemoryKernel::zero(2);
  setup.r = TimeCoefficient::one();
  setup.T = T;
  setup.gamma_ids = observation_boundary(setup.dom, kX0).nodes;
  return setup;
}

}  // namespace

TEST_CASE("observation setup validates inputs and resolves the time step") {
  ObservationSetup setup = line_setup(1.0 / 16, 1.0);
  setup.validate();
  // CFL step for the unit-speed string is h/2; T = 1 needs 32 steps.
  CHECK(setup.resolved_steps() == 32);
  CHECK(setup.resolved_dt() == doctest::Approx(1.0 / 32).epsilon(1e-14));
  setup.dt = 0.01;
  CHECK(setup.resolved_steps() == 100);
  CHECK(setup.resolved_dt() == doctest::Approx(0.01).epsilon(1e-14));

  ObservationSetup bad = line_setup(1.0 / 16, 1.0);
  bad.T = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = line_setup(1.0 / 16, 1.0);
  bad.gamma_ids.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = line_setup(1.0 / 16, 1.0);
  bad.gamma_ids = {99};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = line_setup(1.0 / 16, 1.0);
  bad.r = TimeCoefficient{};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = line_setup(1.0 / 16, 1.0);
  bad.coef = CoefficientField::identity(2);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // R = 1 + 0.9 cos(t) x drops to 0.1 at the left end at t = 0.
  ObservationSetup floored = line_setup(1.0 / 16, 1.0);
  floored.r = TimeCoefficient::cosine(0.9, [](Point p) { return -p[0]; });
  floored.r_floor = 0.05;
  floored.validate();
  floored.r_floor = 0.5;
  CHECK_THROWS_AS(floored.validate(), std::invalid_argument);
}

TEST_CASE("trace operator agrees with conormal values and transposes exactly") {
  const Domain dom = unit_square(1.0 / 8);
  const CoefficientField coef = CoefficientField::diagonal(
      [](Point p) { return 1.0 + 0.3 * p[0]; }, [](Point p) { return 1.5 - 0.4 * p[1]; });
  const std::vector<std::size_t> gamma = observation_boundary(dom, kX0).nodes;
  const TraceOperator op(dom, coef, gamma);
  REQUIRE(op.ids() == gamma);

  // Homogeneous Dirichlet field: the sparse two-node read must reproduce the
  // full conormal formula (tangential terms vanish on the boundary).
  const Field u = make_field(dom, [](Point p) {
    return std::sin(M_PI * p[0]) * std::sin(M_PI * p[1]) * (1.0 + 0.5 * p[0] * p[1]);
  });
  const std::vector<double> sparse = op.apply(u);
  const std::vector<double> full = conormal_values(dom, coef, u, gamma);
  REQUIRE(sparse.size() == full.size());
  double scale = 0.0;
  for (double v : full) scale = std::max(scale, std::abs(v));
  for (std::size_t c = 0; c < sparse.size(); ++c)
    CHECK(std::abs(sparse[c] - full[c]) <= 1e-12 * scale);

  // <G u, g> = <u, G^T g> is an exact rearrangement of one finite sum.
  Rng rng(11);
  Field w(dom.num_nodes(), 0.0);
  for (std::size_t m = 0; m < w.size(); ++m)
    if (dom.is_interior(m)) w[m] = rng.normal();
  std::vector<double> g(gamma.size());
  for (double& v : g) v = rng.normal();
  const std::vector<double> gw = op.apply(w);
  double lhs = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) lhs += gw[c] * g[c];
  Field gt(dom.num_nodes(), 0.0);
  op.add_transpose(g, gt);
  double rhs = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) rhs += w[m] * gt[m];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));

  CHECK_THROWS_AS(op.apply(Field(3, 0.0)), std::invalid_argument);
  Field acc(dom.num_nodes(), 0.0);
  CHECK_THROWS_AS(op.add_transpose(std::vector<double>(2, 0.0), acc),
                  std::invalid_argument);
}

TEST_CASE("data map matches the driven-string closed form and is linear") {
  // R = 1, f = sin(pi x): u = sin(pi x)(1 - cos(pi t))/pi^2, so the conormal
  // trace at either end is -(1 - cos(pi t))/pi.
  ObservationSetup setup = line_setup(1.0 / 64, 1.0);
  const Field f = make_field(setup.dom, [](Point p) { return std::sin(M_PI * p[0]); });
  const BoundaryTrace d = forward_map(setup, f);
  REQUIRE(d.values.size() == static_cast<std::size_t>(setup.resolved_steps()) + 1);
  REQUIRE(d.boundary_ids == setup.gamma_ids);
  double max_err = 0.0;
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    const double exact = -(1.0 - std::cos(M_PI * k * d.dt)) / M_PI;
    for (double v : d.values[k]) max_err = std::max(max_err, std::abs(v - exact));
  }
  CHECK(max_err < 1.5e-3);

  // Linearity in the source field, exercised through the full solve.
  const Field g = windowed_bump(setup.dom, 0.7);
  Field combo = f;
  for (std::size_t m = 0; m < combo.size(); ++m) combo[m] += 2.0 * g[m];
  const BoundaryTrace dg = forward_map(setup, g);
  const BoundaryTrace dc = forward_map(setup, combo);
  double lin_err = 0.0, lin_scale = 0.0;
  for (std::size_t k = 0; k < dc.values.size(); ++k)
    for (std::size_t c = 0; c < dc.values[k].size(); ++c) {
      lin_err = std::max(lin_err, std::abs(dc.values[k][c] - d.values[k][c] -
                                           2.0 * dg.values[k][c]));
      lin_scale = std::max(lin_scale, std::abs(dc.values[k][c]));
    }
  CHECK(lin_err <= 1e-12 * std::max(lin_scale, 1.0));

  // Sources touching the boundary are rejected.
  CHECK_THROWS_AS(forward_map(setup, Field(setup.dom.num_nodes(), 1.0)),
                  std::invalid_argument);
}

TEST_CASE("adjoint identity holds for every kernel structure") {
  ObservationSetup setup = square_setup(1.0 / 8, 0.4);
  setup.r = TimeCoefficient::cosine(0.5, [](Point p) { return 1.0 + 0.5 * p[0]; });

  const MemoryKernel kernels[] = {
      MemoryKernel::zero(2),
      MemoryKernel::stationary(2, value_profile(0.6)),
      MemoryKernel::exponential(2, 1.5, value_profile(0.8)),
      MemoryKernel::separable(
          2, value_profile(0.5), [](double t, double eta) { return std::cos(t - eta); },
          [](double t, double eta) { return -std::sin(t - eta); }),
  };
  for (std::size_t ki = 0; ki < 4; ++ki) {
    CAPTURE(ki);
    setup.kernel = kernels[ki];
    const DotTestReport rep = adjoint_dot_test(setup, 1000 + ki, 5);
    REQUIRE(rep.per_pair.size() == 5);
    CHECK(rep.max_rel_error < 1e-12);
  }

  // A kernel with a first-derivative profile exercises the non-symmetric
  // history transpose.
  MemoryKernel::ProfileArray mixed{};
  mixed[static_cast<int>(Deriv::value)] = [](Point p) { return 0.4 + 0.2 * p[1]; };
  mixed[static_cast<int>(Deriv::d1)] = [](Point p) { return 0.3 * p[0]; };
  setup.kernel = MemoryKernel::stationary(2, mixed);
  CHECK(adjoint_dot_test(setup, 77, 5).max_rel_error < 1e-12);
}

TEST_CASE("adjoint equals the weighted transpose of the explicit data matrix") {
  ObservationSetup setup = line_setup(1.0 / 8, 0.5);
  setup.dt = 1.0 / 16;
  setup.r = TimeCoefficient::cosine(0.4, [](Point p) { return 1.0 - 0.5 * p[0]; });
  setup.kernel = MemoryKernel::stationary(1, value_profile(0.7));
  const Domain& dom = setup.dom;
  const int n = setup.resolved_steps();
  REQUIRE(n == 8);
  const double h = dom.spacing();
  const double dt = setup.resolved_dt();
  const std::size_t n_ch = setup.gamma_ids.size();

  // Columns of the data matrix: the trace of each unit nodal source.
  std::vector<std::vector<std::vector<double>>> col(dom.num_nodes());
  for (std::size_t j = 0; j < dom.num_nodes(); ++j) {
    if (!dom.is_interior(j)) continue;
    Field e(dom.num_nodes(), 0.0);
    e[j] = 1.0;
    col[j] = forward_map(setup, e).values;
  }

  // Rows of the adjoint: one unit data impulse per frame and channel. The
  // transpose identity ties them through the quadrature weights on both sides:
  // h <e_j, adj(e_kc)> = tw_k arc_c <fwd(e_j), e_kc>.
  BoundaryTrace unit;
  unit.t0 = 0.0;
  unit.dt = dt;
  unit.boundary_ids = setup.gamma_ids;
  for (std::size_t id : setup.gamma_ids)
    unit.weights.push_back(dom.boundary()[id].weight);
  unit.values.assign(n + 1, std::vector<double>(n_ch, 0.0));

  double max_err = 0.0, scale = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double tw = (k == 0 || k == n) ? 0.5 * dt : dt;
    for (std::size_t c = 0; c < n_ch; ++c) {
      unit.values[k][c] = 1.0;
      const Field adj = adjoint_map(setup, unit);
      unit.values[k][c] = 0.0;
      for (std::size_t j = 0; j < dom.num_nodes(); ++j) {
        if (!dom.is_interior(j)) continue;
        const double lhs = h * adj[j];
        const double rhs = tw * unit.weights[c] * col[j][k][c];
        max_err = std::max(max_err, std::abs(lhs - rhs));
        scale = std::max(scale, std::abs(rhs));
      }
    }
  }
  CHECK(scale > 0.0);
  CHECK(max_err <= 1e-13 * scale);

  // Frame-count and layout mismatches are rejected.
  BoundaryTrace bad = unit;
  bad.values.pop_back();
  CHECK_THROWS_AS(adjoint_map(setup, bad), std::invalid_argument);
  bad = unit;
  bad.boundary_ids = {0};
  CHECK_THROWS_AS(adjoint_map(setup, bad), std::invalid_argument);
}

TEST_CASE("noiseless reconstruction converges monotonically to the source") {
  ObservationSetup setup = line_setup(1.0 / 32, 1.0);
  const Field truth =
      make_field(setup.dom, [](Point p) { return std::sin(M_PI * p[0]); });
  const BoundaryTrace data = forward_map(setup, truth);

  ReconstructionOptions opts;
  opts.max_iters = 60;
  opts.truth = &truth;
  const ReconstructionResult rec = reconstruct(setup, data, opts);
  CHECK(rec.converged);
  CHECK(rec.iterations <= 40);
  CHECK(rec.data_misfit < 1e-10);
  REQUIRE(!rec.residual_history.empty());
  for (std::size_t k = 1; k < rec.residual_history.size(); ++k)
    CHECK(rec.residual_history[k] <= rec.residual_history[k - 1] + 1e-14);
  CHECK(rec.residual_history.back() < 1e-10);
  REQUIRE(rec.error_history.size() == rec.residual_history.size());
  CHECK(rec.error_history.back() < 1e-8);
  CHECK(rec.error_history.back() < rec.error_history.front());

  // Reruns are bit-identical.
  const ReconstructionResult again = reconstruct(setup, data, opts);
  double rerun_diff = 0.0;
  for (std::size_t m = 0; m < rec.f.size(); ++m)
    rerun_diff = std::max(rerun_diff, std::abs(rec.f[m] - again.f[m]));
  CHECK(rerun_diff == 0.0);

  // Scaling the data by a power of two scales every iterate exactly.
  BoundaryTrace scaled = data;
  for (auto& frame : scaled.values)
    for (double& v : frame) v *= 1024.0;
  ReconstructionOptions plain;
  plain.max_iters = 60;
  const ReconstructionResult base = reconstruct(setup, data, plain);
  const ReconstructionResult big = reconstruct(setup, scaled, plain);
  double scale_diff = 0.0;
  for (std::size_t m = 0; m < base.f.size(); ++m)
    scale_diff = std::max(scale_diff, std::abs(big.f[m] - 1024.0 * base.f[m]));
  CHECK(scale_diff == 0.0);

  CHECK_THROWS_AS(
      [&] {
        ReconstructionOptions neg;
        neg.alpha = -1.0;
        return reconstruct(setup, data, neg);
      }(),
      std::invalid_argument);
}

TEST_CASE("regularized minimizer is independent of the starting point") {
  ObservationSetup setup = line_setup(1.0 / 16, 0.8);
  const Field truth = windowed_bump(setup.dom, 1.0);
  const BoundaryTrace data = forward_map(setup, truth);

  ReconstructionOptions opts;
  opts.alpha = 1e-6;
  opts.max_iters = 200;
  opts.tol = 1e-12;
  const ReconstructionResult from_zero = reconstruct(setup, data, opts);

  const Field start = windowed_bump(setup.dom, 2.5);
  opts.start = &start;
  const ReconstructionResult from_bump = reconstruct(setup, data, opts);
  CHECK(from_zero.converged);
  CHECK(from_bump.converged);
  CHECK(rel_l2_diff(setup.dom, from_bump.f, from_zero.f) < 1e-8);
}

TEST_CASE("regularization beats the unregularized fit on noisy data") {
  ObservationSetup setup = line_setup(1.0 / 32, 1.0);
  const Field truth = windowed_bump(setup.dom, 1.0);
  const BoundaryTrace clean = forward_map(setup, truth);

  // White noise at 5% of the data norm, channel by channel.
  BoundaryTrace noise = clean;
  Rng rng(314);
  for (auto& frame : noise.values)
    for (double& v : frame) v = rng.normal();
  const double level = 0.05 * trace_norm(clean) / trace_norm(noise);
  BoundaryTrace noisy = clean;
  for (std::size_t k = 0; k < noisy.values.size(); ++k)
    for (std::size_t c = 0; c < noisy.values[k].size(); ++c)
      noisy.values[k][c] += level * noise.values[k][c];

  auto final_error = [&](double alpha) {
    ReconstructionOptions opts;
    opts.alpha = alpha;
    opts.max_iters = 150;
    opts.truth = &truth;
    const ReconstructionResult rec = reconstruct(setup, noisy, opts);
    return rec.error_history.back();
  };

  const double raw = final_error(0.0);
  double best = raw;
  for (double alpha : {1e-8, 1e-6, 1e-4, 1e-2}) best = std::min(best, final_error(alpha));
  CAPTURE(raw);
  CAPTURE(best);
  CHECK(best < raw);
  CHECK(best < 0.2);
}

TEST_CASE("stability sweeps report finite two-sided ratios deterministically") {
  ObservationSetup setup = square_setup(1.0 / 8, 1.7);
  setup.kernel = MemoryKernel::exponential(2, 2.0, value_profile(0.5));
  REQUIRE(setup.T > min_observation_time(setup.dom, kX0, 1.0));

  const FieldSampler sampler = sine_sampler(2, 2);
  const StabilityEnsembleReport obs = observability_sweep(setup, 40, 3, sampler);
  REQUIRE(obs.samples.size() == 3);
  for (const StabilitySample& s : obs.samples) {
    CHECK(s.source_norm > 0.0);
    CHECK(s.trace_gamma > 0.0);
    // The observation subset carries at most the full-boundary energy.
    CHECK(s.trace_full >= s.trace_gamma);
    CHECK(s.upper_ratio * s.visibility == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.lower_ratio > 0.0);
    CHECK(std::isfinite(s.upper_ratio));
  }
  CHECK(obs.min_upper > 0.0);
  CHECK(obs.max_upper >= obs.min_upper);
  CHECK(obs.spread_upper >= 1.0);
  CHECK(obs.spread_lower >= 1.0);

  const StabilityEnsembleReport rerun = observability_sweep(setup, 40, 3, sampler);
  for (std::size_t i = 0; i < obs.samples.size(); ++i) {
    CHECK(rerun.samples[i].seed == obs.samples[i].seed);
    CHECK(rerun.samples[i].source_norm == obs.samples[i].source_norm);
    CHECK(rerun.samples[i].trace_gamma == obs.samples[i].trace_gamma);
  }

  setup.r = TimeCoefficient::cosine(0.4, [](Point p) { return 0.5 + 0.5 * p[0]; });
  setup.r_floor = 0.5;
  const StabilityEnsembleReport lip = lipschitz_sweep(setup, 41, 3, sampler);
  REQUIRE(lip.samples.size() == 3);
  for (const StabilitySample& s : lip.samples) {
    CHECK(s.source_norm > 0.0);
    CHECK(s.trace_full >= s.trace_gamma);
    CHECK(s.trace_gamma > 0.0);
    CHECK(std::isfinite(s.upper_ratio));
    CHECK(s.lower_ratio > 0.0);
  }

  // The sampler scales linearly in its amplitude knob with the same draws.
  Rng r1(5), r3(5);
  const Field one_amp = sine_sampler(3, 1, 1.0)(setup.dom, r1);
  const Field three_amp = sine_sampler(3, 1, 3.0)(setup.dom, r3);
  double amp_diff = 0.0;
  for (std::size_t m = 0; m < one_amp.size(); ++m)
    amp_diff = std::max(amp_diff, std::abs(three_amp[m] - 3.0 * one_amp[m]));
  CHECK(amp_diff == 0.0);

  CHECK(endpoint_drift(obs, obs) == 0.0);
  StabilityEnsembleReport moved = obs;
  moved.min_upper *= 1.1;
  CHECK(endpoint_drift(obs, moved) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("trace restriction aligns refined data with the coarse layout") {
  const double T = 1.0;
  ObservationSetup coarse = square_setup(1.0 / 8, T);
  coarse.dt = 1.0 / 16;
  ObservationSetup fine = square_setup(1.0 / 16, T);
  fine.dt = 1.0 / 32;

  const Field f_fine = windowed_bump(fine.dom, 1.0);
  const BoundaryTrace dfine = forward_map(fine, f_fine);
  REQUIRE(dfine.values.size() == 33);

  const BoundaryTrace down = restrict_trace(dfine, fine.dom, coarse.dom, coarse.coef,
                                            coarse.gamma_ids);
  CHECK(down.dt == doctest::Approx(2.0 * dfine.dt).epsilon(1e-14));
  REQUIRE(down.values.size() == 17);
  CHECK(down.boundary_ids == coarse.gamma_ids);
  REQUIRE(down.weights.size() == coarse.gamma_ids.size());
  for (std::size_t c = 0; c < down.weights.size(); ++c)
    CHECK(down.weights[c] ==
          doctest::Approx(coarse.dom.boundary()[coarse.gamma_ids[c]].weight));

  // Every restricted channel replays the fine channel at the same position on
  // even frames.
  for (std::size_t c = 0; c < coarse.gamma_ids.size(); ++c) {
    const Point xc =
        coarse.dom.node(coarse.dom.boundary()[coarse.gamma_ids[c]].node);
    std::size_t fc = dfine.boundary_ids.size();
    for (std::size_t j = 0; j < dfine.boundary_ids.size(); ++j) {
      const Point xf = fine.dom.node(fine.dom.boundary()[dfine.boundary_ids[j]].node);
      if (std::abs(xf[0] - xc[0]) < 1e-12 && std::abs(xf[1] - xc[1]) < 1e-12) {
        fc = j;
        break;
      }
    }
    REQUIRE(fc < dfine.boundary_ids.size());
    for (std::size_t k = 0; k < down.values.size(); ++k)
      CHECK(down.values[k][c] == dfine.values[2 * k][fc]);
  }

  BoundaryTrace odd = dfine;
  odd.values.pop_back();
  CHECK_THROWS_AS(restrict_trace(odd, fine.dom, coarse.dom, coarse.coef,
                                 coarse.gamma_ids),
                  std::invalid_argument);

  // Asking for a coarse node outside the observed fine subset fails loudly.
  std::vector<std::size_t> all_ids(coarse.dom.boundary().size());
  for (std::size_t i = 0; i < all_ids.size(); ++i) all_ids[i] = i;
  CHECK_THROWS_AS(restrict_trace(dfine, fine.dom, coarse.dom, coarse.coef, all_ids),
                  std::invalid_argument);
}

TEST_CASE("reconstruction from refined-grid data avoids the inverse crime") {
  const double T = 1.0;
  ObservationSetup coarse = square_setup(1.0 / 8, T);
  coarse.dt = 1.0 / 16;
  ObservationSetup fine = square_setup(1.0 / 16, T);
  fine.dt = 1.0 / 32;

  const BoundaryTrace dfine = forward_map(fine, windowed_bump(fine.dom, 1.0));
  const BoundaryTrace data = restrict_trace(dfine, fine.dom, coarse.dom, coarse.coef,
                                            coarse.gamma_ids);

  const Field truth = windowed_bump(coarse.dom, 1.0);
  ReconstructionOptions opts;
  opts.alpha = 1e-6;
  opts.max_iters = 80;
  opts.truth = &truth;
  const ReconstructionResult rec = reconstruct(coarse, data, opts);
  CAPTURE(rec.error_history.back());
  CAPTURE(rec.data_misfit);
  // Data produced on the refined grid: the fit is limited by discretization
  // error, not by the solver, so the misfit must be visible but small.
  CHECK(rec.error_history.back() < 0.15);
  CHECK(rec.data_misfit > 1e-6);
  CHECK(rec.data_misfit < 0.1);
}
