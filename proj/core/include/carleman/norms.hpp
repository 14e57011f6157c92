#pragma once

#include <vector>

#include "carleman/fields.hpp"
#include "carleman/forward_solver.hpp"
#include "carleman/geometry.hpp"

namespace carleman {

// Squared Sobolev norm of order m (0..3): sum over all coordinate derivatives
// of order <= m of the squared grid L2 norm.
double sobolev_norm_sq(const Domain& dom, const Field& u, int m);

// Squared space-time norm: sum over time-derivative orders j <= k_time of the
// time integral of the squared H^{m_space} norm of the j-th time derivative.
double space_time_sobolev_sq(const SpaceTimeField& u, int k_time, int m_space);

// Squared trace norms over the stored boundary subset: L2 in time and on the
// boundary (with the stored arc weights), optionally including time
// derivatives up to order m.
double trace_l2_sq(const BoundaryTrace& trace);
double trace_sobolev_sq(const BoundaryTrace& trace, int m);

// Time series of the j-th time derivative of a single trace channel.
std::vector<double> trace_time_derivative(const BoundaryTrace& trace, std::size_t channel,
                                          int order);

// Discrete Dirichlet form sum_ij a_ij d_i u d_j u integrated over the box,
// evaluated through the divergence-form stencil so it is exactly the quadratic
// form of the discrete operator.
double dirichlet_form(const Domain& dom, const CoefficientField& coef, const Field& u);

struct EnergySeries {
  std::vector<double> times;      // midpoints between stored frames
  std::vector<double> energy;     // |du/dt|^2 + Dirichlet form, physical energy
  std::vector<double> invariant;  // discrete quantity conserved by the scheme
  double initial_energy = 0.0;
  double sup_ratio = 0.0;        // max energy / initial energy
  double invariant_drift = 0.0;  // max relative drift of the invariant
};

EnergySeries energy_series(const SimulationResult& result);

}  // namespace carleman
