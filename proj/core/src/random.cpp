#include "carleman/random.hpp"

#include <cmath>
#include <stdexcept>

namespace carleman {

Rng::Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

std::uint64_t Rng::next_u64() {
  // splitmix64; fixed algorithm keeps streams portable.
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform01(); }

double Rng::normal() {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double SineSeries::operator()(Point x) const {
  const double sx = (x[0] - lo[0]) / (hi[0] - lo[0]);
  double acc = 0.0;
  if (dim == 1) {
    for (int k = 1; k <= kmax; ++k) acc += coef[k - 1] * std::sin(k * kPi * sx);
  } else {
    const double sy = (x[1] - lo[1]) / (hi[1] - lo[1]);
    for (int k = 1; k <= kmax; ++k)
      for (int l = 1; l <= kmax; ++l)
        acc += coef[(k - 1) * kmax + (l - 1)] * std::sin(k * kPi * sx) * std::sin(l * kPi * sy);
  }
  for (int p = 0; p < window_pow; ++p) {
    acc *= 4.0 * sx * (1.0 - sx);
    if (dim == 2) {
      const double sy = (x[1] - lo[1]) / (hi[1] - lo[1]);
      acc *= 4.0 * sy * (1.0 - sy);
    }
  }
  return amplitude * acc;
}

SineSeries random_sine_series(Rng& rng, const Domain& dom, int kmax, int window_pow) {
  if (kmax < 1) throw std::invalid_argument("random_sine_series: kmax must be positive");
  if (window_pow < 0) throw std::invalid_argument("random_sine_series: negative window power");
  SineSeries s;
  s.dim = dom.dim();
  s.kmax = kmax;
  s.lo = dom.lower();
  s.hi = dom.upper();
  s.window_pow = window_pow;
  const int n = s.dim == 1 ? kmax : kmax * kmax;
  s.coef.resize(n);
  for (int i = 0; i < n; ++i) s.coef[i] = rng.normal();
  return s;
}

double SmoothSpaceTime::operator()(Point x, double t) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < spatial.size(); ++i)
    acc += spatial[i](x) * std::cos(freq[i] * t + phase[i]);
  return acc;
}

SmoothSpaceTime random_space_time(Rng& rng, const Domain& dom, int kmax, int n_terms,
                                  double T) {
  if (n_terms < 1) throw std::invalid_argument("random_space_time: n_terms must be positive");
  SmoothSpaceTime w;
  for (int i = 0; i < n_terms; ++i) {
    w.spatial.push_back(random_sine_series(rng, dom, kmax, 0));
    w.freq.push_back((i + 1) * kPi / (2.0 * T));
    w.phase.push_back(rng.uniform(0.0, 2.0 * kPi));
  }
  return w;
}

}  // namespace carleman
