#include "carleman/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace carleman {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sq(double v) { return v * v; }

double dist2(Point a, Point b, int dim) {
  double d = sq(a[0] - b[0]);
  if (dim == 2) d += sq(a[1] - b[1]);
  return d;
}

void require_outside(const Domain& dom, Point x0, const char* fn) {
  const Point lo = dom.lower(), hi = dom.upper();
  bool inside = x0[0] >= lo[0] && x0[0] <= hi[0];
  if (dom.dim() == 2) inside = inside && x0[1] >= lo[1] && x0[1] <= hi[1];
  if (inside)
    throw std::invalid_argument(std::string(fn) + ": x0 must lie outside the closed box");
}

std::vector<Point> box_corners(const Domain& dom) {
  const Point lo = dom.lower(), hi = dom.upper();
  if (dom.dim() == 1) return {Point{lo[0], 0.0}, Point{hi[0], 0.0}};
  return {Point{lo[0], lo[1]}, Point{hi[0], lo[1]}, Point{lo[0], hi[1]}, Point{hi[0], hi[1]}};
}

// C-infinity step: 0 at r <= 0, 1 at r >= 1. bump(r) = exp(-1/r).
struct SmoothStep {
  double s, s1, s2;  // value and first two derivatives w.r.t. r
};

SmoothStep smooth_step(double r) {
  if (r <= 0.0) return {0.0, 0.0, 0.0};
  if (r >= 1.0) return {1.0, 0.0, 0.0};
  const double A = std::exp(-1.0 / r);
  const double B = std::exp(-1.0 / (1.0 - r));
  const double A1 = A / sq(r);
  const double B1 = -B / sq(1.0 - r);
  const double A2 = A / sq(sq(r)) - 2.0 * A / (sq(r) * r);
  const double B2 = B / sq(sq(1.0 - r)) - 2.0 * B / (sq(1.0 - r) * (1.0 - r));
  const double den = A + B;
  const double s = A / den;
  const double s1 = (A1 * B - A * B1) / sq(den);
  const double s2 = ((A2 * B - A * B2) * den - 2.0 * (A1 * B - A * B1) * (A1 + B1)) /
                    (sq(den) * den);
  return {s, s1, s2};
}

}  // namespace

std::string face_name(Face f) {
  switch (f) {
    case Face::x_lo: return "x_lo";
    case Face::x_hi: return "x_hi";
    case Face::y_lo: return "y_lo";
    case Face::y_hi: return "y_hi";
  }
  return "unknown";
}

Domain::Domain() : Domain(1, Point{0.0, 0.0}, Point{1.0, 0.0}, 0.5) {}

Domain::Domain(int dim, Point lo, Point hi, double h) : dim_(dim), lo_(lo), hi_(hi), h_(h) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("Domain: dim must be 1 or 2");
  if (!(h > 0.0)) throw std::invalid_argument("Domain: spacing must be positive");
  cells_ = {0, 0};
  for (int ax = 0; ax < dim_; ++ax) {
    const double extent = hi_[ax] - lo_[ax];
    if (!(extent > 0.0)) throw std::invalid_argument("Domain: box requires lower < upper");
    const double n_real = extent / h;
    const int n = static_cast<int>(std::lround(n_real));
    if (n < 2 || std::abs(n * h - extent) > 1e-9 * extent)
      throw std::invalid_argument("Domain: spacing does not divide the box extent");
    cells_[ax] = n;
  }
  if (dim_ == 1) {
    lo_[1] = hi_[1] = 0.0;
    boundary_.push_back({index(0), Face::x_lo, Point{-1.0, 0.0}, 1.0});
    boundary_.push_back({index(cells_[0]), Face::x_hi, Point{1.0, 0.0}, 1.0});
    return;
  }
  const int nx = cells_[0], ny = cells_[1];
  auto edge_weight = [&](int i, int n) { return (i == 0 || i == n) ? 0.5 * h_ : h_; };
  for (int iy = 0; iy <= ny; ++iy) {
    boundary_.push_back({index(0, iy), Face::x_lo, Point{-1.0, 0.0}, edge_weight(iy, ny)});
    boundary_.push_back({index(nx, iy), Face::x_hi, Point{1.0, 0.0}, edge_weight(iy, ny)});
  }
  // Corner nodes are owned by the x faces above, so the y faces skip them.
  for (int ix = 1; ix < nx; ++ix) {
    boundary_.push_back({index(ix, 0), Face::y_lo, Point{0.0, -1.0}, h_});
    boundary_.push_back({index(ix, ny), Face::y_hi, Point{0.0, 1.0}, h_});
  }
}

std::size_t Domain::num_nodes() const {
  std::size_t n = static_cast<std::size_t>(cells_[0]) + 1;
  if (dim_ == 2) n *= static_cast<std::size_t>(cells_[1]) + 1;
  return n;
}

double Domain::diameter() const {
  return std::sqrt(dist2(lo_, hi_, dim_));
}

std::size_t Domain::index(int ix, int iy) const {
  return static_cast<std::size_t>(iy) * (cells_[0] + 1) + static_cast<std::size_t>(ix);
}

void Domain::unpack(std::size_t idx, int& ix, int& iy) const {
  const int stride = cells_[0] + 1;
  ix = static_cast<int>(idx % stride);
  iy = static_cast<int>(idx / stride);
}

Point Domain::node(int ix, int iy) const {
  return {lo_[0] + ix * h_, dim_ == 2 ? lo_[1] + iy * h_ : 0.0};
}

Point Domain::node(std::size_t idx) const {
  int ix, iy;
  unpack(idx, ix, iy);
  return node(ix, iy);
}

bool Domain::on_boundary(int ix, int iy) const {
  if (ix == 0 || ix == cells_[0]) return true;
  return dim_ == 2 && (iy == 0 || iy == cells_[1]);
}

bool Domain::is_interior(std::size_t idx) const {
  int ix, iy;
  unpack(idx, ix, iy);
  return !on_boundary(ix, iy);
}

CoefficientField CoefficientField::identity(int dim) {
  return scalar(dim, 1.0);
}

CoefficientField CoefficientField::scalar(int dim, double c) {
  auto cc = [c](Point) { return c; };
  auto zero = [](Point) { return 0.0; };
  auto gz = [](Point) { return Point{0.0, 0.0}; };
  return general(dim, cc, zero, zero, cc, gz, gz, gz);
}

CoefficientField CoefficientField::diagonal(Scalar a11, Scalar a22) {
  auto zero = [](Point) { return 0.0; };
  return general(2, std::move(a11), zero, zero, std::move(a22));
}

CoefficientField CoefficientField::general(int dim, Scalar a11, Scalar a12, Scalar a21,
                                           Scalar a22, Gradient g11, Gradient g12,
                                           Gradient g22) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("CoefficientField: dim must be 1 or 2");
  if (!a11 || (dim == 2 && (!a12 || !a21 || !a22)))
    throw std::invalid_argument("CoefficientField: missing entry callable");
  CoefficientField f;
  f.dim_ = dim;
  f.a11_ = std::move(a11);
  f.a12_ = std::move(a12);
  f.a21_ = std::move(a21);
  f.a22_ = std::move(a22);
  f.g11_ = std::move(g11);
  f.g12_ = std::move(g12);
  f.g22_ = std::move(g22);
  return f;
}

double CoefficientField::entry(int i, int j, Point x) const {
  if (i == 0 && j == 0) return a11_(x);
  if (dim_ == 1) return 0.0;
  if (i == 1 && j == 1) return a22_(x);
  return a12_(x);
}

double CoefficientField::entry_derivative(int k, int i, int j, Point x, double fd_step) const {
  if (k >= dim_) return 0.0;
  if (g11_) {
    const Gradient& g = (i == 0 && j == 0) ? g11_ : ((i == 1 && j == 1) ? g22_ : g12_);
    return g(x)[k];
  }
  if (!(fd_step > 0.0))
    throw std::invalid_argument("CoefficientField::entry_derivative: fd_step must be positive");
  Point xp = x, xm = x;
  xp[k] += fd_step;
  xm[k] -= fd_step;
  return (entry(i, j, xp) - entry(i, j, xm)) / (2.0 * fd_step);
}

double CoefficientField::min_eigenvalue(Point x) const {
  if (dim_ == 1) return a11_(x);
  const double p = a11_(x), q = a12_(x), r = a22_(x);
  return 0.5 * (p + r) - std::sqrt(sq(0.5 * (p - r)) + sq(q));
}

double CoefficientField::spectral_radius(Point x) const {
  if (dim_ == 1) return std::abs(a11_(x));
  const double p = a11_(x), q = a12_(x), r = a22_(x);
  const double root = std::sqrt(sq(0.5 * (p - r)) + sq(q));
  return std::max(std::abs(0.5 * (p + r) + root), std::abs(0.5 * (p + r) - root));
}

double CoefficientField::validate(const Domain& dom) const {
  if (dom.dim() != dim_)
    throw std::invalid_argument("CoefficientField::validate: dimension mismatch");
  double mu0 = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < dom.num_nodes(); ++idx) {
    const Point x = dom.node(idx);
    if (dim_ == 2) {
      const double asym = std::abs(a12_(x) - a21_(x));
      const double scale = std::abs(a12_(x)) + std::abs(a21_(x)) + 1.0;
      if (asym > 1e-12 * scale)
        throw std::invalid_argument("CoefficientField::validate: a12 != a21 at x = (" +
                                    std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")");
    }
    const double lam = min_eigenvalue(x);
    if (!(lam > 0.0))
      throw std::invalid_argument("CoefficientField::validate: ellipticity fails at x = (" +
                                  std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")");
    mu0 = std::min(mu0, lam);
  }
  return mu0;
}

double CarlemanWeight::psi(Point x, double t) const {
  return (dist2(x, x0, 2) - beta * t * t) / scale;
}

double CarlemanWeight::phi(Point x, double t) const {
  return std::exp(gamma * psi(x, t));
}

CarlemanWeight CarlemanWeight::normalized(const Domain& dom, Point x0, double beta,
                                          double gamma) {
  require_outside(dom, x0, "CarlemanWeight::normalized");
  if (!(beta > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("CarlemanWeight::normalized: beta and gamma must be positive");
  if (dom.dim() == 1) x0[1] = 0.0;
  double d2max = 0.0;
  for (const Point& c : box_corners(dom)) d2max = std::max(d2max, dist2(c, x0, dom.dim()));
  CarlemanWeight w;
  w.x0 = x0;
  w.beta = beta;
  w.gamma = gamma;
  w.scale = d2max;
  return w;
}

CutoffFunction::CutoffFunction(double T, double eps) : T_(T), eps_(eps) {
  if (!(T > 0.0)) throw std::invalid_argument("CutoffFunction: T must be positive");
  if (!(eps > 0.0) || !(eps < T / 4.0))
    throw std::invalid_argument("CutoffFunction: eps must lie in (0, T/4)");
}

double CutoffFunction::value(double t) const {
  const double a = std::abs(t);
  if (a <= T_ - 2.0 * eps_) return 1.0;
  if (a >= T_ - eps_) return 0.0;
  return smooth_step((T_ - eps_ - a) / eps_).s;
}

double CutoffFunction::d1(double t) const {
  const double a = std::abs(t);
  if (a <= T_ - 2.0 * eps_ || a >= T_ - eps_) return 0.0;
  const double sgn = t >= 0.0 ? 1.0 : -1.0;
  return smooth_step((T_ - eps_ - a) / eps_).s1 * (-sgn / eps_);
}

double CutoffFunction::d2(double t) const {
  const double a = std::abs(t);
  if (a <= T_ - 2.0 * eps_ || a >= T_ - eps_) return 0.0;
  return smooth_step((T_ - eps_ - a) / eps_).s2 / sq(eps_);
}

double principal_symbol(const CoefficientField& a, Point x, Point xi) {
  if (a.dim() == 1) return a.a11(x) * sq(xi[0]);
  return a.a11(x) * sq(xi[0]) + 2.0 * a.a12(x) * xi[0] * xi[1] + a.a22(x) * sq(xi[1]);
}

double convexity_ratio(const CoefficientField& a, Point x0, Point x, Point xi,
                       double fd_step) {
  const int n = a.dim();
  double A[2][2] = {{a.a11(x), a.a12(x)}, {a.a12(x), a.a22(x)}};
  if (n == 1) A[1][1] = 1.0;  // unused; keeps the inverse well defined

  double dA[2][2][2] = {};  // dA[k][i][j] = d a_ij / d x_k
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dA[k][i][j] = a.entry_derivative(k, i, j, x, fd_step);

  const Point r{x[0] - x0[0], n == 2 ? x[1] - x0[1] : 0.0};
  double Axi[2] = {A[0][0] * xi[0] + A[0][1] * xi[1], A[1][0] * xi[0] + A[1][1] * xi[1]};
  double Ar[2] = {A[0][0] * r[0] + A[0][1] * r[1], A[1][0] * r[0] + A[1][1] * r[1]};
  if (n == 1) Axi[1] = Ar[1] = 0.0;

  // {a,{a,d}} = 8|A0 xi|^2 + 8 sum_j (A0 xi)_j (r . dA_j xi) - 4 sum_j (xi . dA_j xi)(A0 r)_j
  double bracket = 8.0 * (sq(Axi[0]) + sq(Axi[1]));
  for (int j = 0; j < n; ++j) {
    double r_dA_xi = 0.0, xi_dA_xi = 0.0;
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) {
        r_dA_xi += r[i] * dA[j][i][m] * xi[m];
        xi_dA_xi += xi[i] * dA[j][i][m] * xi[m];
      }
    bracket += 8.0 * Axi[j] * r_dA_xi - 4.0 * xi_dA_xi * Ar[j];
  }

  double inv_norm2;
  if (n == 1) {
    inv_norm2 = sq(xi[0] / A[0][0]);
  } else {
    const double det = A[0][0] * A[1][1] - sq(A[0][1]);
    if (std::abs(det) < 1e-300)
      throw std::invalid_argument("convexity_ratio: coefficient matrix is singular");
    const double y0 = (A[1][1] * xi[0] - A[0][1] * xi[1]) / det;
    const double y1 = (-A[0][1] * xi[0] + A[0][0] * xi[1]) / det;
    inv_norm2 = sq(y0) + sq(y1);
  }
  return bracket / inv_norm2;
}

PseudoConvexityReport check_pseudo_convexity(const CoefficientField& a, const Domain& dom,
                                             Point x0, const ConvexitySampling& sampling) {
  require_outside(dom, x0, "check_pseudo_convexity");
  if (a.dim() != dom.dim())
    throw std::invalid_argument("check_pseudo_convexity: dimension mismatch");
  a.validate(dom);
  const double fd_step = sampling.fd_step_rel * dom.diameter();

  std::vector<Point> dirs;
  if (dom.dim() == 1) {
    dirs = {Point{1.0, 0.0}, Point{-1.0, 0.0}};
  } else {
    if (sampling.n_xi < 4)
      throw std::invalid_argument("check_pseudo_convexity: n_xi must be at least 4");
    dirs.reserve(sampling.n_xi);
    for (int k = 0; k < sampling.n_xi; ++k) {
      const double th = 2.0 * kPi * k / sampling.n_xi;
      dirs.push_back({std::cos(th), std::sin(th)});
    }
  }

  PseudoConvexityReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < dom.num_nodes(); ++idx) {
    const Point x = dom.node(idx);
    for (const Point& xi : dirs) {
      const double ratio = convexity_ratio(a, x0, x, xi, fd_step);
      if (ratio < rep.min_ratio) {
        rep.min_ratio = ratio;
        rep.worst_x = x;
        rep.worst_xi = xi;
      }
    }
  }
  rep.pass = rep.min_ratio > sampling.margin;
  rep.mu1 = rep.pass ? rep.min_ratio : 0.0;
  return rep;
}

GammaMask observation_boundary(const Domain& dom, Point x0) {
  require_outside(dom, x0, "observation_boundary");
  if (dom.dim() == 1) x0[1] = 0.0;
  GammaMask mask;
  std::array<int, 4> total{0, 0, 0, 0}, picked{0, 0, 0, 0};
  const auto& bnodes = dom.boundary();
  for (std::size_t i = 0; i < bnodes.size(); ++i) {
    const BoundaryNode& bn = bnodes[i];
    const Point x = dom.node(bn.node);
    total[static_cast<int>(bn.face)] += 1;
    const double dot = (x[0] - x0[0]) * bn.normal[0] + (x[1] - x0[1]) * bn.normal[1];
    if (dot >= 0.0) {
      mask.nodes.push_back(i);
      picked[static_cast<int>(bn.face)] += 1;
    }
  }
  const int n_faces = dom.dim() == 1 ? 2 : 4;
  for (int f = 0; f < n_faces; ++f) {
    std::string status = picked[f] == 0 ? "none" : (picked[f] == total[f] ? "all" : "partial");
    mask.face_summary.emplace_back(face_name(static_cast<Face>(f)), status);
  }
  return mask;
}

double min_observation_time(const Domain& dom, Point x0, double beta) {
  require_outside(dom, x0, "min_observation_time");
  if (!(beta > 0.0))
    throw std::invalid_argument("min_observation_time: beta must be positive");
  if (dom.dim() == 1) x0[1] = 0.0;
  double d2max = 0.0;
  for (const Point& c : box_corners(dom)) d2max = std::max(d2max, dist2(c, x0, dom.dim()));
  return std::sqrt(d2max / beta);
}

CutoffCalibration calibrate_cutoff_levels(const CarlemanWeight& w, const Domain& dom,
                                          double T, double eps) {
  if (!(eps > 0.0) || !(eps < T / 4.0))
    throw std::invalid_argument("calibrate_cutoff_levels: eps must lie in (0, T/4)");
  const double threshold = min_observation_time(dom, w.x0, w.beta);
  if (!(T > threshold))
    throw std::invalid_argument("calibrate_cutoff_levels: T must exceed the observation threshold");

  // phi is even in t, so scanning the positive band covers both bands.
  const int nt = 64;
  CutoffCalibration cal;
  double delta = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= nt; ++k) {
    const double t = (T - 2.0 * eps) + eps * k / nt;
    for (std::size_t idx = 0; idx < dom.num_nodes(); ++idx)
      delta = std::max(delta, w.phi(dom.node(idx), t));
  }
  cal.delta = delta;
  cal.eps0 = 1.0 - delta;
  bool plateau_ok = true;
  for (int k = 0; k <= nt && plateau_ok; ++k) {
    const double t = 2.0 * eps * k / nt;
    for (std::size_t idx = 0; idx < dom.num_nodes(); ++idx)
      if (w.phi(dom.node(idx), t) < 1.0 + cal.eps0) {
        plateau_ok = false;
        break;
      }
  }
  cal.valid = delta < 1.0 && plateau_ok;
  return cal;
}

}  // namespace carleman
