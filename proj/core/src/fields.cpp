#include "carleman/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace carleman {

int deriv_order(Deriv d) {
  switch (d) {
    case Deriv::value: return 0;
    case Deriv::d1:
    case Deriv::d2: return 1;
    default: return 2;
  }
}

const std::vector<Deriv>& active_derivs(int dim) {
  static const std::vector<Deriv> one{Deriv::value, Deriv::d1, Deriv::d11};
  static const std::vector<Deriv> two{Deriv::value, Deriv::d1,  Deriv::d2,
                                      Deriv::d11,   Deriv::d12, Deriv::d22};
  return dim == 1 ? one : two;
}

Field make_field(const Domain& dom, const std::function<double(Point)>& f) {
  Field out(dom.num_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(dom.node(i));
  return out;
}

Field make_field(const Domain& dom, const std::function<double(Point, double)>& f, double t) {
  Field out(dom.num_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(dom.node(i), t);
  return out;
}

Field zero_field(const Domain& dom) { return Field(dom.num_nodes(), 0.0); }

std::vector<double> fd_weights(int k, const std::vector<double>& offsets, double x0) {
  const int n = static_cast<int>(offsets.size());
  if (k < 0 || n < k + 1)
    throw std::invalid_argument("fd_weights: need at least k+1 stencil nodes");
  // Fornberg recursion; w[j][m] holds the order-m weight of node j.
  std::vector<std::vector<double>> w(n, std::vector<double>(k + 1, 0.0));
  w[0][0] = 1.0;
  double c1 = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    const double xi = offsets[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double xj = offsets[j] - x0;
      const double c3 = xi - xj;
      c2 *= c3;
      if (j == i - 1) {
        for (int m = std::min(i, k); m >= 1; --m)
          w[i][m] = c1 * (m * w[i - 1][m - 1] - (offsets[i - 1] - x0) * w[i - 1][m]) / c2;
        w[i][0] = -c1 * (offsets[i - 1] - x0) * w[i - 1][0] / c2;
      }
      for (int m = std::min(i, k); m >= 1; --m)
        w[j][m] = (xi * w[j][m] - m * w[j][m - 1]) / c3;
      w[j][0] = xi * w[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> out(n);
  for (int j = 0; j < n; ++j) out[j] = w[j][k];
  return out;
}

namespace {

struct Stencil {
  int start = 0;  // first node index relative to the evaluation node
  std::vector<double> w;
};

// Second-order stencil family for derivative k on a line of n+1 nodes.
// Interior: centered (3 nodes for k=1,2; 5 for k=3). Near edges: shifted windows
// of 3/4/5 nodes, which keep at least second order.
Stencil line_stencil(int k, int i, int n) {
  int size, start;
  if (k == 1) {
    size = 3;
    start = std::clamp(i - 1, 0, n - 2);
  } else if (k == 2) {
    if (i >= 1 && i <= n - 1) {
      size = 3;
      start = i - 1;
    } else {
      size = 4;
      start = std::clamp(i - 1, 0, n - 3);
    }
  } else if (k == 3) {
    size = 5;
    start = std::clamp(i - 2, 0, n - 4);
  } else {
    throw std::invalid_argument("line_stencil: derivative order must be 1, 2 or 3");
  }
  if (n + 1 < size)
    throw std::invalid_argument("line_stencil: line too short for the requested derivative");
  std::vector<double> offs(size);
  for (int j = 0; j < size; ++j) offs[j] = start - i + j;
  return {start - i, fd_weights(k, offs)};
}

void line_derivative(const double* src, std::ptrdiff_t stride, int n_cells, double h, int k,
                     double* dst, std::ptrdiff_t dstride) {
  const double hk = std::pow(h, k);
  for (int i = 0; i <= n_cells; ++i) {
    const Stencil st = line_stencil(k, i, n_cells);
    double acc = 0.0;
    for (std::size_t j = 0; j < st.w.size(); ++j)
      acc += st.w[j] * src[(i + st.start + static_cast<int>(j)) * stride];
    dst[i * dstride] = acc / hk;
  }
}

}  // namespace

Field axis_derivative(const Domain& dom, const Field& u, int axis, int k) {
  if (u.size() != dom.num_nodes())
    throw std::invalid_argument("axis_derivative: field size mismatch");
  if (axis < 0 || axis >= dom.dim())
    throw std::invalid_argument("axis_derivative: axis out of range");
  Field out(u.size());
  const double h = dom.spacing();
  if (dom.dim() == 1) {
    line_derivative(u.data(), 1, dom.cells(0), h, k, out.data(), 1);
    return out;
  }
  const int nx = dom.cells(0), ny = dom.cells(1);
  const std::ptrdiff_t row = nx + 1;
  if (axis == 0) {
    for (int iy = 0; iy <= ny; ++iy)
      line_derivative(u.data() + iy * row, 1, nx, h, k, out.data() + iy * row, 1);
  } else {
    for (int ix = 0; ix <= nx; ++ix)
      line_derivative(u.data() + ix, row, ny, h, k, out.data() + ix, row);
  }
  return out;
}

Field space_derivative(const Domain& dom, const Field& u, Deriv d) {
  switch (d) {
    case Deriv::value: return u;
    case Deriv::d1: return axis_derivative(dom, u, 0, 1);
    case Deriv::d2: return axis_derivative(dom, u, 1, 1);
    case Deriv::d11: return axis_derivative(dom, u, 0, 2);
    case Deriv::d22: return axis_derivative(dom, u, 1, 2);
    case Deriv::d12: return axis_derivative(dom, axis_derivative(dom, u, 0, 1), 1, 1);
  }
  throw std::invalid_argument("space_derivative: bad selector");
}

Field mixed_derivative(const Domain& dom, const Field& u, int kx, int ky) {
  Field out = u;
  if (kx > 0) out = axis_derivative(dom, out, 0, kx);
  if (ky > 0) out = axis_derivative(dom, out, 1, ky);
  return out;
}

Field quadrature_weights(const Domain& dom) {
  Field w(dom.num_nodes());
  const double h = dom.spacing();
  const double hn = dom.dim() == 1 ? h : h * h;
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    int ix, iy;
    dom.unpack(idx, ix, iy);
    double f = (ix == 0 || ix == dom.cells(0)) ? 0.5 : 1.0;
    if (dom.dim() == 2 && (iy == 0 || iy == dom.cells(1))) f *= 0.5;
    w[idx] = f * hn;
  }
  return w;
}

double integrate(const Domain& dom, const Field& f) {
  const Field w = quadrature_weights(dom);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * f[i];
  return acc;
}

double inner(const Domain& dom, const Field& f, const Field& g) {
  const Field w = quadrature_weights(dom);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * f[i] * g[i];
  return acc;
}

double norm_l2(const Domain& dom, const Field& f) { return std::sqrt(inner(dom, f, f)); }

double norm_linf(const Field& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double inner_interior(const Domain& dom, const Field& f, const Field& g) {
  const double hn = dom.dim() == 1 ? dom.spacing() : dom.spacing() * dom.spacing();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (dom.is_interior(i)) acc += f[i] * g[i];
  return hn * acc;
}

double norm_l2_interior(const Domain& dom, const Field& f) {
  return std::sqrt(inner_interior(dom, f, f));
}

SpaceTimeField time_derivative(const SpaceTimeField& u, int k) {
  const int n = u.steps();
  SpaceTimeField out;
  out.dom = u.dom;
  out.t0 = u.t0;
  out.dt = u.dt;
  out.frames.assign(n + 1, Field(u.frames.at(0).size(), 0.0));
  const double hk = std::pow(u.dt, k);
  for (int i = 0; i <= n; ++i) {
    const Stencil st = line_stencil(k, i, n);
    Field& dst = out.frames[i];
    for (std::size_t j = 0; j < st.w.size(); ++j) {
      const Field& src = u.frames[i + st.start + static_cast<int>(j)];
      const double w = st.w[j] / hk;
      for (std::size_t m = 0; m < dst.size(); ++m) dst[m] += w * src[m];
    }
  }
  return out;
}

SpaceTimeField space_derivative(const SpaceTimeField& u, Deriv d) {
  SpaceTimeField out;
  out.dom = u.dom;
  out.t0 = u.t0;
  out.dt = u.dt;
  out.frames.reserve(u.frames.size());
  for (const Field& f : u.frames) out.frames.push_back(space_derivative(u.dom, f, d));
  return out;
}

std::vector<double> time_quadrature(const SpaceTimeField& u) {
  std::vector<double> w(u.frames.size(), u.dt);
  if (!w.empty()) w.front() = w.back() = 0.5 * u.dt;
  return w;
}

}  // namespace carleman
