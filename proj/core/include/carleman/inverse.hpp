#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "carleman/forward_solver.hpp"
#include "carleman/memory_kernel.hpp"
#include "carleman/norms.hpp"
#include "carleman/random.hpp"

namespace carleman {

// Geometry, coefficients, kernel, source amplitude, horizon and observation
// subset shared by the data map, its adjoint, and the stability sweeps.
struct ObservationSetup {
  Domain dom;
  CoefficientField coef;
  MemoryKernel kernel;
  TimeCoefficient r;
  double T = 1.0;
  double dt = 0.0;  // 0: stability-limited step
  std::vector<std::size_t> gamma_ids;
  double r_floor = 0.0;  // required min |R(.,0)| over the grid; 0 disables

  void validate() const;
  // The step count and step actually used by the time stepper.
  int resolved_steps() const;
  double resolved_dt() const;
};

// Sparse boundary read: each channel is a linear functional of at most two
// interior nodes (one-sided normal-derivative stencil scaled by the normal
// coefficient row; tangential contributions vanish on homogeneous Dirichlet
// fields). Agrees with conormal values on Dirichlet fields and transposes
// exactly.
class TraceOperator {
 public:
  TraceOperator(const Domain& dom, const CoefficientField& coef,
                std::vector<std::size_t> gamma_ids);

  const std::vector<std::size_t>& ids() const { return ids_; }
  std::vector<double> apply(const Field& u) const;
  void add_transpose(const std::vector<double>& channel_values, Field& acc) const;

 private:
  struct Entry {
    std::size_t node = 0;
    double weight = 0.0;
  };
  std::vector<std::array<Entry, 2>> rows_;
  std::vector<std::size_t> ids_;
  std::size_t n_nodes_ = 0;
};

// Data map f -> conormal trace of the zero-initial-data solution driven by
// R(x,t) f(x); linear in f.
BoundaryTrace forward_map(const ObservationSetup& setup, const Field& f);

// Exact transpose of forward_map between the interior inner product and the
// trace quadrature inner product, via the backward multiplier recursion with
// reversed running sums for the history term.
Field adjoint_map(const ObservationSetup& setup, const BoundaryTrace& data);

// Trace-space inner product (time trapezoid x arc weights) and norm.
double trace_inner(const BoundaryTrace& a, const BoundaryTrace& b);
double trace_norm(const BoundaryTrace& a);

struct DotTestReport {
  double max_rel_error = 0.0;
  std::vector<double> per_pair;
};

// <forward(f), g>_trace vs <f, adjoint(g)>_interior on seeded random pairs.
DotTestReport adjoint_dot_test(const ObservationSetup& setup, std::uint64_t seed,
                               int n_pairs);

struct ReconstructionOptions {
  double alpha = 0.0;  // Tikhonov weight on the interior inner product
  int max_iters = 200;
  double tol = 1e-12;            // relative normal-equation residual target
  const Field* truth = nullptr;  // enables the error history
  const Field* start = nullptr;  // CG initial iterate (default zero)
};

struct ReconstructionResult {
  Field f;
  std::vector<double> residual_history;  // relative normal-equation residual
  std::vector<double> error_history;     // relative interior L2 error vs truth
  int iterations = 0;
  bool converged = false;
  double data_misfit = 0.0;  // |A f - d| / |d| in the trace norm
};

ReconstructionResult reconstruct(const ObservationSetup& setup, const BoundaryTrace& data,
                                 const ReconstructionOptions& opts = {});

struct StabilitySample {
  std::uint64_t seed = 0;
  double source_norm = 0.0;   // H3 norm of a, or H2 norm of f
  double trace_gamma = 0.0;   // time-Sobolev trace norm on the observation subset
  double trace_full = 0.0;    // same norm on the whole boundary
  double upper_ratio = 0.0;   // source_norm / trace_gamma
  double lower_ratio = 0.0;   // trace_full / source_norm
  double visibility = 0.0;    // trace_gamma / source_norm
};

struct StabilityEnsembleReport {
  std::vector<StabilitySample> samples;
  double min_upper = 0.0, max_upper = 0.0;
  double min_lower = 0.0, max_lower = 0.0;
  double min_visibility = 0.0, max_visibility = 0.0;
  double spread_upper = 0.0;  // max_upper / min_upper
  double spread_lower = 0.0;
};

using FieldSampler = std::function<Field(const Domain&, Rng&)>;

// Windowed random sine series sampler (window power >= 1 keeps the sample in
// the zero-trace class; power 2 additionally flattens second derivatives).
FieldSampler sine_sampler(int kmax, int window_pow, double amplitude = 1.0);

// Initial-value observability: for each sample a, solves the source-free
// problem with value data a and zero velocity, and compares the H3 norm of a
// with the H2-in-time trace norms (observation subset and full boundary).
// Trace time derivatives come from the time-differentiated systems.
StabilityEnsembleReport observability_sweep(const ObservationSetup& setup,
                                            std::uint64_t seed, int n_samples,
                                            const FieldSampler& sampler);

// Source stability: for each sample f, compares the H2 norm of f with the
// H3-in-time trace norms of the solution driven by R f.
StabilityEnsembleReport lipschitz_sweep(const ObservationSetup& setup, std::uint64_t seed,
                                        int n_samples, const FieldSampler& sampler);

// Largest relative movement of the two-sided ratio interval endpoints.
double endpoint_drift(const StabilityEnsembleReport& a, const StabilityEnsembleReport& b);

// Restricts a trace sampled on a once-refined grid (half spacing, half step)
// onto the coarse observation layout by matching boundary positions and taking
// every second frame.
BoundaryTrace restrict_trace(const BoundaryTrace& fine, const Domain& fine_dom,
                             const Domain& coarse_dom, const CoefficientField& coef,
                             const std::vector<std::size_t>& coarse_ids);

}  // namespace carleman
