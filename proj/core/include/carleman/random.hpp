#pragma once

#include <cstdint>
#include <vector>

#include "carleman/fields.hpp"
#include "carleman/geometry.hpp"

namespace carleman {

// Deterministic generator with explicit bit-to-double conversion so that seeded
// runs reproduce bit-identically across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform01();                  // [0, 1)
  double uniform(double a, double b);  // [a, b)
  double normal();                     // Box-Muller, no cached spare

 private:
  std::uint64_t state_;
};

// Truncated Fourier sine series on the box, modes 1..kmax per axis, Gaussian
// coefficients. `window_pow` multiplies the series by powers of the polynomial
// bump prod_i 4 s_i (1 - s_i) (s = box-relative coordinate): power 1 flattens
// value and gradient on the boundary, power 2 additionally flattens second
// derivatives, which keeps time-differentiated systems compatible with the
// homogeneous boundary condition.
struct SineSeries {
  int dim = 2;
  int kmax = 1;
  Point lo{0.0, 0.0}, hi{1.0, 1.0};
  int window_pow = 0;
  double amplitude = 1.0;
  std::vector<double> coef;  // kmax entries in 1-D, kmax*kmax row-major in 2-D

  double operator()(Point x) const;
};

SineSeries random_sine_series(Rng& rng, const Domain& dom, int kmax, int window_pow);

// Smooth seeded space-time field: a few sine series modulated by low-frequency
// trigonometric time factors on [-T, T].
struct SmoothSpaceTime {
  std::vector<SineSeries> spatial;
  std::vector<double> freq, phase;

  double operator()(Point x, double t) const;
};

SmoothSpaceTime random_space_time(Rng& rng, const Domain& dom, int kmax, int n_terms,
                                  double T);

}  // namespace carleman
