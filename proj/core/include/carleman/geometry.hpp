#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace carleman {

// Points are stored with two slots in both 1-D and 2-D; the second slot is 0 in 1-D.
using Point = std::array<double, 2>;

enum class Face : int { x_lo = 0, x_hi = 1, y_lo = 2, y_hi = 3 };

std::string face_name(Face f);

struct BoundaryNode {
  std::size_t node = 0;  // flat node index
  Face face = Face::x_lo;  // owning face; corner nodes belong to the lowest axis face
  Point normal{0.0, 0.0};  // outward unit normal of the owning face
  double weight = 0.0;     // trace quadrature weight (h^{n-1}, halved at face ends)
};

// Uniform tensor grid on a box. Nodes include the boundary; spacing is shared by
// all axes and must divide every extent.
class Domain {
 public:
  Domain();  // unit 1-D placeholder so containers of results stay movable
  Domain(int dim, Point lo, Point hi, double h);

  int dim() const { return dim_; }
  double spacing() const { return h_; }
  Point lower() const { return lo_; }
  Point upper() const { return hi_; }
  int cells(int axis) const { return cells_[axis]; }
  int nodes(int axis) const { return cells_[axis] + 1; }
  std::size_t num_nodes() const;
  double diameter() const;

  std::size_t index(int ix, int iy = 0) const;
  void unpack(std::size_t idx, int& ix, int& iy) const;
  Point node(std::size_t idx) const;
  Point node(int ix, int iy) const;
  bool on_boundary(int ix, int iy) const;
  bool is_interior(std::size_t idx) const;

  const std::vector<BoundaryNode>& boundary() const { return boundary_; }

 private:
  int dim_;
  Point lo_, hi_;
  double h_;
  std::array<int, 2> cells_;
  std::vector<BoundaryNode> boundary_;
};

// Symmetric coefficient matrix a_ij(x) of the principal part, with optional
// analytic spatial gradients. In 1-D only a11 is used.
class CoefficientField {
 public:
  using Scalar = std::function<double(Point)>;
  using Gradient = std::function<Point(Point)>;

  static CoefficientField identity(int dim);
  static CoefficientField scalar(int dim, double c);
  static CoefficientField diagonal(Scalar a11, Scalar a22);
  // Full symmetric field; pass a21 separately so the symmetry requirement can be
  // validated instead of silently assumed. Gradients are optional (empty =>
  // central finite differences with a step relative to the domain diameter).
  static CoefficientField general(int dim, Scalar a11, Scalar a12, Scalar a21, Scalar a22,
                                  Gradient g11 = {}, Gradient g12 = {}, Gradient g22 = {});

  int dim() const { return dim_; }
  bool has_analytic_gradient() const { return static_cast<bool>(g11_); }

  double a11(Point x) const { return a11_(x); }
  double a12(Point x) const { return dim_ == 2 ? a12_(x) : 0.0; }
  double a22(Point x) const { return dim_ == 2 ? a22_(x) : 0.0; }
  double entry(int i, int j, Point x) const;

  // d/dx_k of entry (i,j); fd_step is used when no analytic gradient is attached.
  double entry_derivative(int k, int i, int j, Point x, double fd_step) const;

  // Smallest eigenvalue of (a_ij(x)).
  double min_eigenvalue(Point x) const;
  // Largest eigenvalue magnitude; bounds the wave speed squared.
  double spectral_radius(Point x) const;

  // Checks symmetry and uniform ellipticity on the node grid. Returns the
  // ellipticity floor mu0; throws with a witness point on failure.
  double validate(const Domain& dom) const;

 private:
  int dim_ = 2;
  Scalar a11_, a12_, a21_, a22_;
  Gradient g11_, g12_, g22_;
};

// Space-time weight psi(x,t) = (|x-x0|^2 - beta t^2)/scale and phi = exp(gamma psi).
// The normalized factory picks scale = max over the closed box of |x-x0|^2 so that
// psi(.,0) lies in (0,1]; scale = 1 gives the raw, unscaled weight.
struct CarlemanWeight {
  Point x0{0.0, 0.0};
  double beta = 1.0;
  double gamma = 1.0;
  double scale = 1.0;

  double psi(Point x, double t) const;
  double phi(Point x, double t) const;

  static CarlemanWeight normalized(const Domain& dom, Point x0, double beta, double gamma);
};

// Smooth even cutoff in time: 1 on |t| <= T - 2 eps, 0 on |t| >= T - eps,
// C-infinity monotone transition in between.
class CutoffFunction {
 public:
  CutoffFunction(double T, double eps);
  double T() const { return T_; }
  double eps() const { return eps_; }
  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;

 private:
  double T_, eps_;
};

struct PseudoConvexityReport {
  double min_ratio = 0.0;  // min over samples of {a,{a,d}} / |A0^{-1} xi|^2
  double mu1 = 0.0;        // admissible constant estimate (= min_ratio when positive)
  bool pass = false;
  Point worst_x{0.0, 0.0};
  Point worst_xi{0.0, 0.0};
};

struct ConvexitySampling {
  int n_xi = 64;              // unit covectors per node in 2-D; 1-D always uses {+1,-1}
  double margin = 1e-6;       // pass requires min_ratio > margin
  double fd_step_rel = 1e-4;  // coefficient FD step relative to domain diameter
};

struct GammaMask {
  std::vector<std::size_t> nodes;  // indices into Domain::boundary()
  // Per-face summary: "all", "partial", "none" keyed by face_name.
  std::vector<std::pair<std::string, std::string>> face_summary;
};

struct CutoffCalibration {
  double delta = 0.0;  // max of phi over the closed box times both cutoff bands
  double eps0 = 0.0;   // 1 - delta
  bool valid = false;  // delta < 1 and phi >= 1 + eps0 on |t| <= 2 eps
};

// Principal symbol a(x,xi) = A0(x) xi . xi.
double principal_symbol(const CoefficientField& a, Point x, Point xi);

// Ratio {a,{a,d}}(x,xi) / |A0(x)^{-1} xi|^2 with d(x) = |x - x0|^2.
double convexity_ratio(const CoefficientField& a, Point x0, Point x, Point xi, double fd_step);

PseudoConvexityReport check_pseudo_convexity(const CoefficientField& a, const Domain& dom,
                                             Point x0, const ConvexitySampling& sampling = {});

// Boundary nodes where (x - x0) . normal >= 0.
GammaMask observation_boundary(const Domain& dom, Point x0);

// max over the closed box of |x - x0| divided by sqrt(beta); observation needs T
// strictly above this value.
double min_observation_time(const Domain& dom, Point x0, double beta);

// delta = max phi over the closed box times {T - 2 eps <= |t| <= T - eps} by grid
// maximization, eps0 = 1 - delta, plus the plateau check phi >= 1 + eps0 on |t| <= 2 eps.
CutoffCalibration calibrate_cutoff_levels(const CarlemanWeight& w, const Domain& dom,
                                          double T, double eps);

}  // namespace carleman
