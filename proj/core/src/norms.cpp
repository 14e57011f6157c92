#include "carleman/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace carleman {

namespace {

// Multi-indices of each total order for the dimension.
std::vector<std::pair<int, int>> order_indices(int dim, int order) {
  std::vector<std::pair<int, int>> out;
  if (dim == 1) {
    out.push_back({order, 0});
    return out;
  }
  for (int kx = order; kx >= 0; --kx) out.push_back({kx, order - kx});
  return out;
}

double frame_sobolev_sq(const Domain& dom, const Field& u, int m) {
  double acc = norm_l2(dom, u);
  acc *= acc;
  for (int order = 1; order <= m; ++order)
    for (auto [kx, ky] : order_indices(dom.dim(), order)) {
      const double n = norm_l2(dom, mixed_derivative(dom, u, kx, ky));
      acc += n * n;
    }
  return acc;
}

// Same window policy as the spatial stencils: shifted windows near the ends so
// the order of accuracy is uniform along the series.
std::vector<double> series_derivative(const std::vector<double>& y, double dt, int k) {
  const int n = static_cast<int>(y.size());
  std::vector<double> out(n, 0.0);
  if (k == 0) return y;
  const int width = k == 1 ? 3 : (k == 2 ? 3 : 5);
  if (n < width + (k == 2 ? 1 : 0))
    throw std::invalid_argument("series_derivative: series too short");
  const double scale = std::pow(dt, -k);
  for (int i = 0; i < n; ++i) {
    int start, w;
    if (k == 1) {
      w = 3;
      start = std::clamp(i - 1, 0, n - 3);
    } else if (k == 2) {
      const bool edge = i == 0 || i == n - 1;
      w = edge ? 4 : 3;
      start = edge ? std::clamp(i - 1, 0, n - 4) : i - 1;
    } else {
      w = 5;
      start = std::clamp(i - 2, 0, n - 5);
    }
    std::vector<double> offsets(w);
    for (int j = 0; j < w; ++j) offsets[j] = start + j - i;
    const std::vector<double> wts = fd_weights(k, offsets);
    double acc = 0.0;
    for (int j = 0; j < w; ++j) acc += wts[j] * y[start + j];
    out[i] = acc * scale;
  }
  return out;
}

}  // namespace

double sobolev_norm_sq(const Domain& dom, const Field& u, int m) {
  if (m < 0 || m > 3) throw std::invalid_argument("sobolev_norm_sq: order must be 0..3");
  return frame_sobolev_sq(dom, u, m);
}

double space_time_sobolev_sq(const SpaceTimeField& u, int k_time, int m_space) {
  if (k_time < 0 || k_time > 3)
    throw std::invalid_argument("space_time_sobolev_sq: time order must be 0..3");
  double acc = 0.0;
  for (int j = 0; j <= k_time; ++j) {
    const SpaceTimeField& v = u;
    SpaceTimeField dv;
    const SpaceTimeField* cur = &v;
    if (j > 0) {
      dv = time_derivative(u, j);
      cur = &dv;
    }
    const std::vector<double> tw = time_quadrature(*cur);
    for (std::size_t k = 0; k < cur->frames.size(); ++k)
      acc += tw[k] * frame_sobolev_sq(u.dom, cur->frames[k], m_space);
  }
  return acc;
}

std::vector<double> trace_time_derivative(const BoundaryTrace& trace, std::size_t channel,
                                          int order) {
  std::vector<double> y(trace.values.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = trace.values[k].at(channel);
  return series_derivative(y, trace.dt, order);
}

double trace_l2_sq(const BoundaryTrace& trace) { return trace_sobolev_sq(trace, 0); }

double trace_sobolev_sq(const BoundaryTrace& trace, int m) {
  if (m < 0 || m > 3) throw std::invalid_argument("trace_sobolev_sq: order must be 0..3");
  const std::size_t n_frames = trace.values.size();
  if (n_frames < 2) throw std::invalid_argument("trace_sobolev_sq: too few frames");
  double acc = 0.0;
  for (std::size_t c = 0; c < trace.boundary_ids.size(); ++c) {
    for (int j = 0; j <= m; ++j) {
      const std::vector<double> dy = trace_time_derivative(trace, c, j);
      double channel = 0.0;
      for (std::size_t k = 0; k < n_frames; ++k) {
        const double tw = (k == 0 || k + 1 == n_frames) ? 0.5 * trace.dt : trace.dt;
        channel += tw * dy[k] * dy[k];
      }
      acc += trace.weights[c] * channel;
    }
  }
  return acc;
}

double dirichlet_form(const Domain& dom, const CoefficientField& coef, const Field& u) {
  const Field au = apply_operator_a(dom, coef, u, false);
  return -inner_interior(dom, au, u);
}

EnergySeries energy_series(const SimulationResult& result) {
  const SpaceTimeField& u = result.u;
  const Domain& dom = u.dom;
  if (u.steps() < 1) throw std::invalid_argument("energy_series: too few frames");
  EnergySeries out;
  const int n = u.steps();
  out.times.reserve(n);
  out.energy.reserve(n);
  out.invariant.reserve(n);

  std::vector<double> form(n + 1);
  std::vector<Field> au(n + 1);
  for (int k = 0; k <= n; ++k) {
    au[k] = apply_operator_a(dom, result.coef, u.frames[k], false);
    form[k] = -inner_interior(dom, au[k], u.frames[k]);
  }
  for (int k = 0; k < n; ++k) {
    const Field& a = u.frames[k];
    const Field& b = u.frames[k + 1];
    double kin = 0.0, mixed = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
      const double d = (b[m] - a[m]) / u.dt;
      kin += d * d;
      mixed += au[k][m] * b[m];
    }
    const double hN = std::pow(dom.spacing(), dom.dim());
    kin *= hN;
    mixed *= hN;
    out.times.push_back(u.time(k) + 0.5 * u.dt);
    out.energy.push_back(kin + 0.5 * (form[k] + form[k + 1]));
    out.invariant.push_back(0.5 * kin - 0.5 * mixed);
  }

  out.initial_energy = out.energy.front();
  const double floor_e = std::max(std::abs(out.initial_energy), 1e-300);
  out.sup_ratio = *std::max_element(out.energy.begin(), out.energy.end()) / floor_e;
  const double i0 = out.invariant.front();
  const double floor_i = std::max(std::abs(i0), 1e-300);
  double drift = 0.0;
  for (double v : out.invariant) drift = std::max(drift, std::abs(v - i0));
  out.invariant_drift = drift / floor_i;
  return out;
}

}  // namespace carleman
