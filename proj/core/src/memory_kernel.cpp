#include "carleman/memory_kernel.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace carleman {

namespace {

void check_profiles(int dim, const MemoryKernel::ProfileArray& p) {
  if (dim == 1 && (p[static_cast<int>(Deriv::d2)] || p[static_cast<int>(Deriv::d12)] ||
                   p[static_cast<int>(Deriv::d22)]))
    throw std::invalid_argument("MemoryKernel: y-derivative entries are invalid in 1-D");
}

// Uniform-grid table of a bivariate time factor and its first-slot derivative.
struct TimeTable {
  double dt = 0.0;
  int n = 0;
  std::vector<double> k, kt;  // (n+1)^2 row-major, row = t index, col = eta index

  double at(const std::vector<double>& tab, double t, double eta) const {
    auto clamp01 = [&](double v) { return std::min(std::max(v / dt, 0.0), double(n)); };
    const double ti = clamp01(t), ei = clamp01(eta);
    const int i0 = std::min(static_cast<int>(ti), n - 1);
    const int j0 = std::min(static_cast<int>(ei), n - 1);
    const double fi = ti - i0, fj = ei - j0;
    const auto v = [&](int i, int j) { return tab[static_cast<std::size_t>(i) * (n + 1) + j]; };
    return (1 - fi) * ((1 - fj) * v(i0, j0) + fj * v(i0, j0 + 1)) +
           fi * ((1 - fj) * v(i0 + 1, j0) + fj * v(i0 + 1, j0 + 1));
  }
};

// d/dt of a table along the row index, second order.
std::vector<double> table_dt(const std::vector<double>& tab, int n, double dt) {
  std::vector<double> out((n + 1) * static_cast<std::size_t>(n + 1));
  const auto v = [&](int i, int j) { return tab[static_cast<std::size_t>(i) * (n + 1) + j]; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      double d;
      if (i == 0)
        d = (-3.0 * v(0, j) + 4.0 * v(1, j) - v(2, j)) / (2.0 * dt);
      else if (i == n)
        d = (3.0 * v(n, j) - 4.0 * v(n - 1, j) + v(n - 2, j)) / (2.0 * dt);
      else
        d = (v(i + 1, j) - v(i - 1, j)) / (2.0 * dt);
      out[static_cast<std::size_t>(i) * (n + 1) + j] = d;
    }
  return out;
}

}  // namespace

MemoryKernel MemoryKernel::zero(int dim) {
  MemoryKernel k;
  k.dim_ = dim;
  k.structure_ = KernelStructure::zero;
  return k;
}

MemoryKernel MemoryKernel::stationary(int dim, ProfileArray profiles) {
  check_profiles(dim, profiles);
  MemoryKernel k;
  k.dim_ = dim;
  k.structure_ = KernelStructure::stationary;
  k.profiles_ = std::move(profiles);
  return k;
}

MemoryKernel MemoryKernel::exponential(int dim, double lambda, ProfileArray profiles) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("MemoryKernel::exponential: lambda must be non-negative");
  check_profiles(dim, profiles);
  MemoryKernel k;
  k.dim_ = dim;
  k.structure_ = KernelStructure::exponential;
  k.lambda_ = lambda;
  k.profiles_ = std::move(profiles);
  return k;
}

MemoryKernel MemoryKernel::separable(int dim, ProfileArray profiles, TimeFn k, TimeFn k_t) {
  if (!k) throw std::invalid_argument("MemoryKernel::separable: time factor required");
  check_profiles(dim, profiles);
  MemoryKernel m;
  m.dim_ = dim;
  m.structure_ = KernelStructure::separable;
  m.profiles_ = std::move(profiles);
  m.k_ = std::move(k);
  m.k_t_ = std::move(k_t);
  return m;
}

bool MemoryKernel::is_zero() const {
  if (structure_ == KernelStructure::zero) return true;
  for (const auto& p : profiles_)
    if (p) return false;
  return true;
}

double MemoryKernel::time_factor(double t, double eta) const {
  switch (structure_) {
    case KernelStructure::zero: return 0.0;
    case KernelStructure::stationary: return 1.0;
    case KernelStructure::exponential: return std::exp(-lambda_ * (t - eta));
    case KernelStructure::separable: return k_(t, eta);
  }
  return 0.0;
}

double MemoryKernel::time_factor_dt(double t, double eta) const {
  switch (structure_) {
    case KernelStructure::zero:
    case KernelStructure::stationary: return 0.0;
    case KernelStructure::exponential: return -lambda_ * std::exp(-lambda_ * (t - eta));
    case KernelStructure::separable: {
      if (k_t_) return k_t_(t, eta);
      const double h = 1e-6 * std::max(1.0, std::abs(t));
      return (k_(t + h, eta) - k_(t - h, eta)) / (2.0 * h);
    }
  }
  return 0.0;
}

double MemoryKernel::time_factor_dtt(double t, double eta) const {
  switch (structure_) {
    case KernelStructure::zero:
    case KernelStructure::stationary: return 0.0;
    case KernelStructure::exponential:
      return lambda_ * lambda_ * std::exp(-lambda_ * (t - eta));
    case KernelStructure::separable: {
      const double h = 1e-5 * std::max(1.0, std::abs(t));
      return (time_factor_dt(t + h, eta) - time_factor_dt(t - h, eta)) / (2.0 * h);
    }
  }
  return 0.0;
}

double MemoryKernel::eval(Deriv d, Point x, double t, double eta) const {
  if (!active(d)) return 0.0;
  return profile(d)(x) * time_factor(t, eta);
}

bool MemoryKernel::sampled_smooth(double T, int samples) const {
  for (int i = 0; i <= samples; ++i)
    for (int j = 0; j <= i; ++j) {
      const double t = T * i / samples, eta = T * j / samples;
      if (!std::isfinite(time_factor(t, eta)) || !std::isfinite(time_factor_dt(t, eta)))
        return false;
    }
  return true;
}

std::array<double, kNumDeriv> kernel_at_diagonal(const MemoryKernel& kernel, Point x,
                                                 double t) {
  std::array<double, kNumDeriv> out{};
  for (int d = 0; d < kNumDeriv; ++d) {
    const Deriv dv = static_cast<Deriv>(d);
    out[d] = kernel.active(dv) ? kernel.eval(dv, x, t, t) : 0.0;
  }
  return out;
}

Field apply_memory(const MemoryKernel& kernel, const SpaceTimeField& u, int step) {
  if (step < 0 || step > u.steps())
    throw std::invalid_argument("apply_memory: step out of range");
  Field out(u.frames.at(0).size(), 0.0);
  if (kernel.is_zero() || step == 0) return out;

  const double t = u.time(step);
  Field weighted(out.size(), 0.0);
  for (int j = 0; j <= step; ++j) {
    const double w = (j == 0 || j == step ? 0.5 : 1.0) * u.dt * kernel.time_factor(t, u.time(j));
    const Field& frame = u.frames[j];
    for (std::size_t m = 0; m < weighted.size(); ++m) weighted[m] += w * frame[m];
  }
  for (const Deriv d : active_derivs(u.dom.dim())) {
    if (!kernel.active(d)) continue;
    const Field der = space_derivative(u.dom, weighted, d);
    const auto& g = kernel.profile(d);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] += g(u.dom.node(m)) * der[m];
  }
  return out;
}

MemoryKernel lift(const MemoryKernel& kernel, int level, double t_max, int n_steps) {
  if (level < 0 || level > 3)
    throw std::invalid_argument("lift: level must lie in {0, 1, 2, 3}");
  if (level == 0) return kernel;
  switch (kernel.structure()) {
    case KernelStructure::zero:
    case KernelStructure::stationary:
    case KernelStructure::exponential:
      return kernel;  // exact fixed points of the recursion
    case KernelStructure::separable: break;
  }
  if (!(t_max > 0.0) || n_steps < 8)
    throw std::invalid_argument("lift: tabulation grid requires t_max > 0 and n_steps >= 8");

  const int n = n_steps;
  const double dt = t_max / n;
  auto table = std::make_shared<TimeTable>();
  table->dt = dt;
  table->n = n;
  table->k.resize((n + 1) * static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      table->k[static_cast<std::size_t>(i) * (n + 1) + j] =
          kernel.time_factor(i * dt, j * dt);

  for (int m = 0; m < level; ++m) {
    const std::vector<double> d = table_dt(table->k, n, dt);
    std::vector<double> next((n + 1) * static_cast<std::size_t>(n + 1));
    std::vector<double> prefix(n + 1);
    for (int i = 0; i <= n; ++i) {
      const auto dv = [&](int j) { return d[static_cast<std::size_t>(i) * (n + 1) + j]; };
      prefix[0] = 0.0;
      for (int j = 1; j <= n; ++j) prefix[j] = prefix[j - 1] + 0.5 * dt * (dv(j - 1) + dv(j));
      const double diag = table->k[static_cast<std::size_t>(i) * (n + 1) + i];
      for (int j = 0; j <= n; ++j)
        next[static_cast<std::size_t>(i) * (n + 1) + j] = diag + prefix[i] - prefix[j];
    }
    table->k = std::move(next);
  }
  table->kt = table_dt(table->k, n, dt);

  MemoryKernel::ProfileArray profiles;
  for (int d = 0; d < kNumDeriv; ++d)
    profiles[d] = kernel.profile(static_cast<Deriv>(d));
  auto k_fn = [table](double t, double eta) { return table->at(table->k, t, eta); };
  auto kt_fn = [table](double t, double eta) { return table->at(table->kt, t, eta); };
  return MemoryKernel::separable(kernel.dim(), std::move(profiles), k_fn, kt_fn);
}

}  // namespace carleman
