#pragma once

#include <functional>
#include <vector>

#include "carleman/geometry.hpp"

namespace carleman {

constexpr double kPi = 3.14159265358979323846;

using Field = std::vector<double>;

// Spatial derivative selectors up to order two; 1-D uses {value, d1, d11}.
enum class Deriv : int { value = 0, d1 = 1, d2 = 2, d11 = 3, d12 = 4, d22 = 5 };
constexpr int kNumDeriv = 6;

int deriv_order(Deriv d);
const std::vector<Deriv>& active_derivs(int dim);  // all |alpha| <= 2 for the dimension

Field make_field(const Domain& dom, const std::function<double(Point)>& f);
Field make_field(const Domain& dom, const std::function<double(Point, double)>& f, double t);
Field zero_field(const Domain& dom);

// Finite-difference weights for the k-th derivative at x0 given node offsets
// (unit spacing), computed with the Fornberg recursion.
std::vector<double> fd_weights(int k, const std::vector<double>& offsets, double x0 = 0.0);

// d^k/dx_axis^k of a grid field, second-order accurate: centered stencils in the
// interior, shifted/one-sided stencils of matching order near the edges. k in {1,2,3}.
Field axis_derivative(const Domain& dom, const Field& u, int axis, int k);

Field space_derivative(const Domain& dom, const Field& u, Deriv d);

// General mixed partial with kx derivatives along x and ky along y.
Field mixed_derivative(const Domain& dom, const Field& u, int kx, int ky);

// Trapezoid quadrature weights per node, including the h^n measure factor.
Field quadrature_weights(const Domain& dom);

double integrate(const Domain& dom, const Field& f);
double inner(const Domain& dom, const Field& f, const Field& g);
double norm_l2(const Domain& dom, const Field& f);
double norm_linf(const Field& f);

// Plain h^n sum over interior nodes; the natural pairing for fields that vanish
// on the boundary (reconstruction unknowns, adjoint outputs).
double inner_interior(const Domain& dom, const Field& f, const Field& g);
double norm_l2_interior(const Domain& dom, const Field& f);

// Frames on a shared uniform time grid: frame k holds the field at t0 + k dt.
struct SpaceTimeField {
  Domain dom;
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Field> frames;

  int steps() const { return static_cast<int>(frames.size()) - 1; }
  double time(int k) const { return t0 + k * dt; }
};

// d^k/dt^k per node, k in {1,2,3}; same stencil policy as axis_derivative.
SpaceTimeField time_derivative(const SpaceTimeField& u, int k);

// Applies a spatial derivative frame by frame.
SpaceTimeField space_derivative(const SpaceTimeField& u, Deriv d);

// Trapezoid weights over the time grid (dt, halved at the first and last frame).
std::vector<double> time_quadrature(const SpaceTimeField& u);

}  // namespace carleman
