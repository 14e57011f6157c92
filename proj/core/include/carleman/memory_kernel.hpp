#pragma once

#include <array>
#include <functional>

#include "carleman/fields.hpp"
#include "carleman/geometry.hpp"

namespace carleman {

// All kernels are sums over |alpha| <= 2 of profile_alpha(x) * k(t, eta) with a
// shared bivariate time factor. The structure tag drives the solver fast paths:
// stationary (k == 1) and exponential (k = exp(-lambda (t - eta))) admit O(1)
// per-step running-sum updates and are fixed points of the lift recursion.
enum class KernelStructure { zero, stationary, exponential, separable };

class MemoryKernel {
 public:
  using Profile = std::function<double(Point)>;
  using ProfileArray = std::array<Profile, kNumDeriv>;
  using TimeFn = std::function<double(double, double)>;

  static MemoryKernel zero(int dim);
  static MemoryKernel stationary(int dim, ProfileArray profiles);
  static MemoryKernel exponential(int dim, double lambda, ProfileArray profiles);
  // k_t (partial derivative in the first slot) is optional; a central difference
  // fallback is used when absent.
  static MemoryKernel separable(int dim, ProfileArray profiles, TimeFn k, TimeFn k_t = {});

  KernelStructure structure() const { return structure_; }
  int dim() const { return dim_; }
  double lambda() const { return lambda_; }

  bool active(Deriv d) const { return static_cast<bool>(profiles_[static_cast<int>(d)]); }
  bool is_zero() const;
  const Profile& profile(Deriv d) const { return profiles_[static_cast<int>(d)]; }

  double time_factor(double t, double eta) const;
  double time_factor_dt(double t, double eta) const;
  double time_factor_dtt(double t, double eta) const;
  double eval(Deriv d, Point x, double t, double eta) const;

  // Max |k| and |k t|-derivative over a sample of the time triangle; finite
  // values set the smooth flag used by callers as a soft diagnostic.
  bool sampled_smooth(double T, int samples = 32) const;

 private:
  int dim_ = 2;
  KernelStructure structure_ = KernelStructure::zero;
  double lambda_ = 0.0;
  ProfileArray profiles_{};
  TimeFn k_, k_t_;
};

// Diagonal restriction b_alpha(x, t, t), indexed by Deriv; inactive entries are 0.
std::array<double, kNumDeriv> kernel_at_diagonal(const MemoryKernel& kernel, Point x, double t);

// Memory term at frame `step`: trapezoid quadrature over frames 0..step of
// sum_alpha b_alpha(x, t_step, t_j) d^alpha u(x, t_j). Reference path; the
// solver's incremental updates must reproduce it.
Field apply_memory(const MemoryKernel& kernel, const SpaceTimeField& u, int step);

// Lift recursion: b^(m+1)(x,t,eta) = b^(m)(x,t,t) + int_eta^t dt b^(m)(x,t,xi) dxi.
// Stationary and exponential kernels are returned unchanged (exact fixed
// points); separable time factors are tabulated level by level on a uniform
// grid of n_steps intervals covering [0, t_max], with bilinear evaluation
// between grid times.
MemoryKernel lift(const MemoryKernel& kernel, int level, double t_max, int n_steps);

}  // namespace carleman
