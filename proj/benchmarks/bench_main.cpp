#include <benchmark/benchmark.h>

#include <cmath>

#include "carleman/carleman_scan.hpp"
#include "carleman/forward_solver.hpp"
#include "carleman/geometry.hpp"
#include "carleman/inverse.hpp"
#include "carleman/memory_kernel.hpp"
#include "carleman/norms.hpp"

namespace {

using namespace carleman;

Domain unit_square(double h) { return Domain(2, Point{0, 0}, Point{1, 1}, h); }

MemoryKernel::ProfileArray value_profile(double c) {
  MemoryKernel::ProfileArray p{};
  p[static_cast<int>(Deriv::value)] = [c](Point) { return c; };
  return p;
}

Field bump(const Domain& dom) {
  return make_field(dom, [](Point p) {
    const double wx = p[0] * (1.0 - p[0]);
    const double wy = p[1] * (1.0 - p[1]);
    return 16.0 * wx * wx * wy * wy;
  });
}

ProblemSpec wave_problem(int cells, MemoryKernel kernel) {
  ProblemSpec spec;
  spec.dom = unit_square(1.0 / cells);
  spec.coef = CoefficientField::identity(2);
  spec.kernel = std::move(kernel);
  spec.source.mode = SourceMode::separated;
  spec.source.r = TimeCoefficient::one();
  spec.source.f = bump(spec.dom);
  spec.T = 0.25;
  return spec;
}

void report_node_steps(benchmark::State& state, const SimulationResult& result) {
  const auto frames = static_cast<int64_t>(result.u.frames.size());
  const auto nodes = static_cast<int64_t>(result.u.frames.front().size());
  state.SetItemsProcessed(state.iterations() * frames * nodes);
}

// --- elliptic stencil -------------------------------------------------------

void stencil_apply(benchmark::State& state) {
  const Domain dom = unit_square(1.0 / state.range(0));
  const CoefficientField coef = CoefficientField::general(
      2, [](Point p) { return 2.0 + 0.3 * p[0]; }, [](Point) { return 0.2; },
      [](Point) { return 0.2; }, [](Point p) { return 1.5 + 0.3 * p[1]; });
  const Field u = bump(dom);
  Field out;
  for (auto _ : state) {
    out = apply_operator_a(dom, coef, u);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(u.size()));
}
BENCHMARK(stencil_apply)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

// --- leapfrog step by memory strategy ---------------------------------------
// Stationary and exponential kernels update running sums in O(1) per step; the
// separable fallback re-sums the stored history, so its per-step cost grows
// with the horizon.

void solve_no_memory(benchmark::State& state) {
  const ProblemSpec spec =
      wave_problem(static_cast<int>(state.range(0)), MemoryKernel::zero(2));
  SimulationResult result;
  for (auto _ : state) {
    result = simulate(spec);
    benchmark::DoNotOptimize(result.u.frames.data());
  }
  report_node_steps(state, result);
}
BENCHMARK(solve_no_memory)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void solve_stationary_kernel(benchmark::State& state) {
  const ProblemSpec spec = wave_problem(
      static_cast<int>(state.range(0)), MemoryKernel::stationary(2, value_profile(0.5)));
  SimulationResult result;
  for (auto _ : state) {
    result = simulate(spec);
    benchmark::DoNotOptimize(result.u.frames.data());
  }
  report_node_steps(state, result);
}
BENCHMARK(solve_stationary_kernel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void solve_exponential_kernel(benchmark::State& state) {
  const ProblemSpec spec = wave_problem(
      static_cast<int>(state.range(0)),
      MemoryKernel::exponential(2, 2.0, value_profile(0.5)));
  SimulationResult result;
  for (auto _ : state) {
    result = simulate(spec);
    benchmark::DoNotOptimize(result.u.frames.data());
  }
  report_node_steps(state, result);
}
BENCHMARK(solve_exponential_kernel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void solve_separable_kernel(benchmark::State& state) {
  const ProblemSpec spec = wave_problem(
      static_cast<int>(state.range(0)),
      MemoryKernel::separable(
          2, value_profile(0.5), [](double t, double eta) { return std::cos(t - eta); },
          [](double t, double eta) { return -std::sin(t - eta); }));
  SimulationResult result;
  for (auto _ : state) {
    result = simulate(spec);
    benchmark::DoNotOptimize(result.u.frames.data());
  }
  report_node_steps(state, result);
}
BENCHMARK(solve_separable_kernel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

// --- weighted space-time integral -------------------------------------------

void weighted_space_time_integral(benchmark::State& state) {
  const Domain dom = unit_square(1.0 / state.range(0));
  const CarlemanWeight w(Point{-0.5, 0.5}, 1.0, 2.5, 1.0);
  const int frames = 33;
  const double t0 = -1.0, dt = 2.0 / (frames - 1);
  const PhiGrid grid = tabulate_phi(dom, w, t0, dt, frames);
  SpaceTimeField density;
  density.t0 = t0;
  density.dt = dt;
  const Field f = bump(dom);
  for (int k = 0; k < frames; ++k) density.frames.push_back(f);
  for (auto _ : state) {
    const WeightedValue v = weighted_integral(dom, density, grid, 20.0, 2.0);
    benchmark::DoNotOptimize(v.log_value);
  }
  state.SetItemsProcessed(state.iterations() * frames *
                          static_cast<int64_t>(f.size()));
}
BENCHMARK(weighted_space_time_integral)->Arg(32)->Arg(64)->Arg(128);

// --- Sobolev norm -----------------------------------------------------------

void sobolev_norm_order3(benchmark::State& state) {
  const Domain dom = unit_square(1.0 / state.range(0));
  const Field f = bump(dom);
  for (auto _ : state) {
    const double v = sobolev_norm_sq(dom, f, 3);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(f.size()));
}
BENCHMARK(sobolev_norm_order3)->Arg(64)->Arg(128);

// --- observation map and its adjoint ----------------------------------------

ObservationSetup bench_setup(int cells) {
  ObservationSetup setup;
  setup.dom = unit_square(1.0 / cells);
  setup.coef = CoefficientField::identity(2);
  setup.kernel = MemoryKernel::exponential(2, 2.0, value_profile(0.5));
  setup.r = TimeCoefficient::one();
  setup.T = 0.5;
  setup.gamma_ids = observation_boundary(setup.dom, Point{-0.5, 0.5}).nodes;
  return setup;
}

void forward_observation_map(benchmark::State& state) {
  const ObservationSetup setup = bench_setup(static_cast<int>(state.range(0)));
  const Field f = bump(setup.dom);
  for (auto _ : state) {
    const BoundaryTrace trace = forward_map(setup, f);
    benchmark::DoNotOptimize(trace.values.data());
  }
}
BENCHMARK(forward_observation_map)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void adjoint_observation_map(benchmark::State& state) {
  const ObservationSetup setup = bench_setup(static_cast<int>(state.range(0)));
  const BoundaryTrace data = forward_map(setup, bump(setup.dom));
  for (auto _ : state) {
    const Field g = adjoint_map(setup, data);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(adjoint_observation_map)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

// --- least-squares iterations ------------------------------------------------
// tol = 0 forces the full iteration budget, so time / iteration is the cost of
// one forward plus one adjoint sweep.

void least_squares_iterations(benchmark::State& state) {
  const ObservationSetup setup = bench_setup(32);
  const BoundaryTrace data = forward_map(setup, bump(setup.dom));
  ReconstructionOptions options;
  options.alpha = 1e-6;
  options.max_iters = static_cast<int>(state.range(0));
  options.tol = 0.0;
  for (auto _ : state) {
    const ReconstructionResult rec = reconstruct(setup, data, options);
    benchmark::DoNotOptimize(rec.f.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(least_squares_iterations)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
