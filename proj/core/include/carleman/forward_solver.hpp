#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "carleman/fields.hpp"
#include "carleman/geometry.hpp"
#include "carleman/memory_kernel.hpp"

namespace carleman {

// Time-modulated amplitude R(x,t) of a separated source F = R f, with analytic
// time derivatives up to third order (used by the derivative systems).
struct TimeCoefficient {
  using Fn = std::function<double(Point, double)>;
  Fn r, rt, rtt, rttt;

  static TimeCoefficient one();
  // R = 1 + amp * cos(t) * g(x); keeps |R(.,0)| away from zero when |amp g| < 1.
  static TimeCoefficient cosine(double amp, std::function<double(Point)> g);
};

enum class SourceMode { none, general, separated };

struct SourceSpec {
  SourceMode mode = SourceMode::none;
  // General mode: builds the source field at time t.
  std::function<Field(const Domain&, double)> general;
  // Separated mode: F(x,t) = R(x,t) * f(x), f given on the grid.
  TimeCoefficient r;
  Field f;
};

struct ProblemSpec {
  Domain dom;
  CoefficientField coef;
  MemoryKernel kernel;
  SourceSpec source;
  Field u0, v0;  // initial value and velocity; empty means zero
  double T = 1.0;
  double dt = 0.0;  // 0 requests the CFL-limited automatic step
};

struct SimulationResult {
  SpaceTimeField u;
  CoefficientField coef;
  double cfl_dt = 0.0;
  double mu0 = 0.0;
};

struct BoundaryTrace {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<std::size_t> boundary_ids;   // indices into Domain::boundary()
  std::vector<double> weights;             // trace quadrature weights
  std::vector<std::vector<double>> values; // [frame][trace node]

  int steps() const { return static_cast<int>(values.size()) - 1; }
};

// Largest stable leapfrog step: 0.5 h / sqrt(max spectral radius of the
// coefficient matrix over the nodes).
double cfl_limit(const Domain& dom, const CoefficientField& coef);

// Divergence-form interior stencil with the coefficients presampled on the
// nodes: face values are averages of the adjacent node samples, cross terms are
// centered. Symmetric as a matrix on fields vanishing on the boundary; the
// stepper and the adjoint recursion share this exact stencil.
class DiscreteOperator {
 public:
  DiscreteOperator(const Domain& dom, const CoefficientField& coef);
  // Writes interior rows of the operator; boundary rows are set to zero.
  void apply_interior(const Field& u, Field& out) const;

 private:
  Domain dom_;
  Field a11_, a12_, a22_;
};

// Divergence-form elliptic operator. Interior nodes use the face-averaged
// 5-point stencil plus centered cross terms; boundary nodes (only when
// include_boundary is set) use the one-sided non-conservative expansion
// sum a_ij d_i d_j u + sum (d_i a_ij) d_j u.
Field apply_operator_a(const Domain& dom, const CoefficientField& coef, const Field& u,
                       bool include_boundary = false);

// Explicit leapfrog integration of the memory wave equation on [0, T] with
// homogeneous Dirichlet data. Stationary and exponential kernels use O(1)
// running-sum updates per step; separable kernels fall back to the O(step)
// trapezoid history sum. Throws on CFL violations and non-finite values.
SimulationResult simulate(const ProblemSpec& spec);

// Conormal derivative sum_ij a_ij d_j u nu_i on the selected boundary nodes
// (indices into Domain::boundary(); empty = whole boundary), one trace value
// per frame. Normal direction uses the one-sided second-order stencil.
BoundaryTrace conormal_trace(const SimulationResult& result,
                             const std::vector<std::size_t>& boundary_ids = {});

// Single-field variant used by tests and diagnostics.
std::vector<double> conormal_values(const Domain& dom, const CoefficientField& coef,
                                    const Field& u,
                                    const std::vector<std::size_t>& boundary_ids = {});

// Even reflection to [-T, T]. Requires a numerically vanishing initial
// velocity: the one-sided discrete dt u(.,0) must stay below tol relative to
// the solution scale.
SimulationResult even_extend(const SimulationResult& result, double tol = 1e-2);

// Time-differentiated systems of the base problem. Levels 1..3 solve the
// problems satisfied by dt^k u with the level-k lifted kernel. Two families are
// supported: separated sources with zero initial data (inverse-source setting)
// and source-free problems with initial value data (observability setting).
SimulationResult derivative_system_simulate(const ProblemSpec& spec, int level);

}  // namespace carleman
