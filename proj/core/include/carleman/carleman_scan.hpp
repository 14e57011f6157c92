#pragma once

#include <functional>
#include <string>
#include <vector>

#include "carleman/fields.hpp"
#include "carleman/forward_solver.hpp"
#include "carleman/geometry.hpp"

namespace carleman {

// Weighted space-time integrals s^q integral density phi^q exp(2 s phi) are
// accumulated in log space: for large s the plain value overflows the double
// range while the logarithm stays well conditioned. `value` may be +inf.
struct WeightedValue {
  double value = 0.0;
  double log_value = 0.0;
};

// Per-frame tabulation of the weight phi(x, t) over a time grid.
struct PhiGrid {
  std::vector<Field> phi;
  double phi_max = 0.0;
};

PhiGrid tabulate_phi(const Domain& dom, const CarlemanWeight& w, double t0, double dt,
                     int n_frames);

double log_sum_exp(const std::vector<double>& logs);

// density must be nonnegative; power is the shared exponent q of s and phi.
WeightedValue weighted_integral(const Domain& dom, const SpaceTimeField& density,
                                const PhiGrid& grid, double s, double power);

std::vector<double> make_s_grid(double lo, double hi, int n);

struct ScanPoint {
  double s = 0.0;
  double lhs_log = 0.0;
  std::vector<double> term_log;  // right-hand side components
  double rhs_log = 0.0;
  double ratio_log = 0.0;  // lhs_log - rhs_log
};

// One inequality swept over s. `slope` is the least-squares growth rate of
// log(lhs/rhs) in s over the upper half of the grid, with the explicit
// polynomial prefactor mismatch of the two sides discounted first: a healthy
// ratio may still rise like a power of s at moderate s, but only exponential
// growth keeps a positive residual slope in the tail.
struct ScanCurve {
  std::string name;
  std::vector<std::string> term_names;
  std::vector<ScanPoint> points;
  double slope = 0.0;
  double max_ratio_log = 0.0;
  bool bounded = false;
};

// Pointwise-in-time hyperbolic estimate: weighted gradient and field of y
// against the weighted wave residual plus the boundary flux.
ScanCurve hyperbolic_estimate_scan(const Domain& dom, const CoefficientField& coef,
                                   const CarlemanWeight& w, const SpaceTimeField& y,
                                   const std::vector<std::size_t>& gamma_ids,
                                   const std::vector<double>& s_values,
                                   double slope_tol = 0.05);

// Elliptic estimate with the free weight exponent p.
ScanCurve elliptic_estimate_scan(const Domain& dom, const CoefficientField& coef,
                                 const CarlemanWeight& w, const SpaceTimeField& y,
                                 const std::vector<std::size_t>& gamma_ids,
                                 const std::vector<double>& s_values, double p,
                                 double slope_tol = 0.05);

// Weighted history inequality: the squared running time integral of |w| against
// the pointwise square plus a cutoff-commutator remainder, at weight power q.
// Requires a time grid symmetric about zero. Warns through the returned name
// when s phi < 1 somewhere (the estimate is stated for s phi >= 1).
ScanCurve memory_weight_scan(const Domain& dom, const CarlemanWeight& w,
                             const CutoffFunction& chi, const SpaceTimeField& w_field,
                             double q, const std::vector<double>& s_values,
                             double slope_tol = 0.05);

enum class EstimateVariant {
  second_difference,         // weighted gradient/field of chi*(dtt u - F)
  derivative_family,         // weighted spatial derivatives of chi*u, chi*dt u
  second_derivative_family,  // additionally chi*dtt u; needs dt F
};

struct MainScanReport {
  ScanCurve curve;
  double boundary_max_f = 0.0;    // max |F| on the boundary over time
  double boundary_max_dnf = 0.0;  // max |normal derivative of F| on the boundary
  std::vector<double> middle_share;  // weight of the low-weight-band term in the rhs
  bool middle_share_decreasing = false;
};

// The composite interior estimate on a simulated solution extended to (-T, T).
// `source` samples F, `source_dt` samples dt F (required for the second
// derivative family, may be empty otherwise).
MainScanReport main_estimate_scan(const SimulationResult& sim,
                                  const std::function<Field(const Domain&, double)>& source,
                                  const std::function<Field(const Domain&, double)>& source_dt,
                                  const CarlemanWeight& w, const CutoffFunction& chi,
                                  const std::vector<std::size_t>& gamma_ids,
                                  const std::vector<double>& s_values,
                                  EstimateVariant variant, double slope_tol = 0.05);

}  // namespace carleman
