#include "carleman/geometry.hpp"

#include "carleman/fields.hpp"
#include "carleman/random.hpp"
#include "doctest.h"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

using namespace carleman;

namespace {

// Reference values frozen from an independent nested-finite-difference oracle
// for the Poisson bracket {a,{a,d}} / |A^{-1} xi|^2, d = |x - x0|^2, step 1e-5.
// All of them use x0 = (-0.5, 0.5).
constexpr double kOracleIdentity = 7.999998352622668;
constexpr double kOracleScalar13 = 22.848795294710957;
constexpr double kOracleVarDiagE1 = 10.18709802152281;
constexpr double kOracleVarDiagE2 = 8.000000661938968;
constexpr double kOracleVarDiagMix = 8.738883788452672;
constexpr double kOracleAniso1 = 15.561286420332623;
constexpr double kOracleAniso2 = 6.26017451622866;
constexpr double kOracleAniso3 = 16.09811330260209;

const Point kX0{-0.5, 0.5};

Domain unit_square(double h) { return Domain(2, Point{0.0, 0.0}, Point{1.0, 1.0}, h); }

CoefficientField var_diag() {
  return CoefficientField::diagonal([](Point x) { return 1.0 + 0.1 * x[0]; },
                                    [](Point) { return 1.0; });
}

// Smooth anisotropic sample with analytic gradients.
CoefficientField aniso_field() {
  auto a11 = [](Point x) { return 1.0 + 0.2 * std::sin(kPi * x[0]) * std::sin(kPi * x[1]); };
  auto a12 = [](Point x) { return 0.1 * std::sin(kPi * x[0]) * std::cos(kPi * x[1]); };
  auto a22 = [](Point x) { return 1.0 + 0.15 * std::cos(kPi * x[0] / 2.0); };
  auto g11 = [](Point x) {
    return Point{0.2 * kPi * std::cos(kPi * x[0]) * std::sin(kPi * x[1]),
                 0.2 * kPi * std::sin(kPi * x[0]) * std::cos(kPi * x[1])};
  };
  auto g12 = [](Point x) {
    return Point{0.1 * kPi * std::cos(kPi * x[0]) * std::cos(kPi * x[1]),
                 -0.1 * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1])};
  };
  auto g22 = [](Point x) {
    return Point{-0.075 * kPi * std::sin(kPi * x[0] / 2.0), 0.0};
  };
  return CoefficientField::general(2, a11, a12, a12, a22, g11, g12, g22);
}

CoefficientField shear_field() {
  auto a12 = [](Point x) { return 0.45 * std::sin(3.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]); };
  auto one = [](Point) { return 1.0; };
  return CoefficientField::general(2, one, a12, a12, one);
}

}  // namespace

TEST_CASE("domain validates its construction parameters") {
  CHECK_THROWS_AS(Domain(3, Point{0, 0}, Point{1, 1}, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(Domain(2, Point{0, 0}, Point{1, 1}, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(Domain(2, Point{1, 0}, Point{0, 1}, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(Domain(2, Point{0, 0}, Point{1, 1}, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(Domain(1, Point{0, 0}, Point{1, 0}, 1.0), std::invalid_argument);
}

TEST_CASE("domain indexing round-trips and carries node coordinates") {
  const Domain dom = unit_square(0.25);
  CHECK(dom.cells(0) == 4);
  CHECK(dom.nodes(0) == 5);
  CHECK(dom.num_nodes() == 25);
  CHECK(dom.diameter() == doctest::Approx(std::sqrt(2.0)));
  for (std::size_t idx = 0; idx < dom.num_nodes(); ++idx) {
    int ix, iy;
    dom.unpack(idx, ix, iy);
    CHECK(dom.index(ix, iy) == idx);
    const Point p = dom.node(idx);
    CHECK(p[0] == doctest::Approx(0.25 * ix).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.25 * iy).epsilon(1e-14));
    CHECK(dom.is_interior(idx) == (ix > 0 && ix < 4 && iy > 0 && iy < 4));
  }
}

TEST_CASE("boundary list covers the perimeter with trapezoid arc weights") {
  const Domain dom = unit_square(0.125);
  const int n = dom.cells(0);
  // x faces own full columns including the corners; y faces own the rest.
  CHECK(dom.boundary().size() == static_cast<std::size_t>(4 * n));
  double total = 0.0;
  for (const BoundaryNode& b : dom.boundary()) {
    total += b.weight;
    int ix, iy;
    dom.unpack(b.node, ix, iy);
    if (ix == 0 || ix == n) {
      CHECK((b.face == Face::x_lo || b.face == Face::x_hi));
      const bool corner = (iy == 0 || iy == n);
      CHECK(b.weight == doctest::Approx(corner ? 0.0625 : 0.125));
    } else {
      CHECK((b.face == Face::y_lo || b.face == Face::y_hi));
      CHECK(b.weight == doctest::Approx(0.125));
    }
    const double nrm = std::hypot(b.normal[0], b.normal[1]);
    CHECK(nrm == doctest::Approx(1.0));
  }
  // The y faces skip their corner arcs (owned by the x faces), so the total is
  // the perimeter minus two spacing-sized corner cells.
  CHECK(total == doctest::Approx(4.0 - 2.0 * 0.125).epsilon(1e-13));

  const Domain line(1, Point{0.0, 0.0}, Point{1.0, 0.0}, 0.125);
  REQUIRE(line.boundary().size() == 2);
  CHECK(line.boundary()[0].weight == doctest::Approx(1.0));
  CHECK(line.boundary()[1].normal[0] == doctest::Approx(1.0));
}

TEST_CASE("coefficient field factories expose entries and eigenvalue bounds") {
  const CoefficientField id = CoefficientField::identity(2);
  CHECK(id.has_analytic_gradient());
  CHECK(id.a11(Point{0.3, 0.4}) == doctest::Approx(1.0));
  CHECK(id.a12(Point{0.3, 0.4}) == doctest::Approx(0.0));
  CHECK(id.min_eigenvalue(Point{0.3, 0.4}) == doctest::Approx(1.0));
  CHECK(id.spectral_radius(Point{0.3, 0.4}) == doctest::Approx(1.0));

  const CoefficientField an = aniso_field();
  const Point x{0.25, 0.5};
  CHECK(an.entry(0, 1, x) == doctest::Approx(an.entry(1, 0, x)));
  CHECK(an.entry(0, 0, x) == doctest::Approx(1.0 + 0.2 * std::sin(kPi * 0.25)));
  // Eigenvalues of a symmetric 2x2 straddle the diagonal entries.
  CHECK(an.min_eigenvalue(x) <= an.entry(0, 0, x) + 1e-12);
  CHECK(an.spectral_radius(x) >= an.entry(1, 1, x) - 1e-12);

  const CoefficientField one_d = CoefficientField::scalar(1, 2.5);
  CHECK(one_d.a22(Point{0.5, 0.0}) == doctest::Approx(0.0));
  CHECK(one_d.spectral_radius(Point{0.5, 0.0}) == doctest::Approx(2.5));
}

TEST_CASE("validate returns the ellipticity floor and rejects bad fields") {
  const Domain dom = unit_square(1.0 / 32);
  CHECK(CoefficientField::identity(2).validate(dom) == doctest::Approx(1.0));
  // The shear extremes sit on grid nodes, so the floor is exact.
  CHECK(shear_field().validate(dom) == doctest::Approx(0.55).epsilon(1e-12));

  auto one = [](Point) { return 1.0; };
  auto big = [](Point) { return 1.2; };
  auto small = [](Point) { return 0.8; };
  const CoefficientField asym = CoefficientField::general(2, one, big, small, one);
  CHECK_THROWS_AS(asym.validate(dom), std::invalid_argument);
  const CoefficientField indef =
      CoefficientField::general(2, one, big, big, one);  // eigenvalues {2.2, -0.2}
  CHECK_THROWS_AS(indef.validate(dom), std::invalid_argument);
}

TEST_CASE("principal symbol is the coefficient quadratic form") {
  const CoefficientField v = var_diag();
  CHECK(principal_symbol(v, Point{0.5, 0.5}, Point{1.0, 0.0}) == doctest::Approx(1.05).epsilon(1e-14));
  const CoefficientField an = aniso_field();
  const Point x{0.75, 0.25}, xi{0.6, -0.8};
  const double direct = an.a11(x) * xi[0] * xi[0] + 2.0 * an.a12(x) * xi[0] * xi[1] +
                        an.a22(x) * xi[1] * xi[1];
  CHECK(principal_symbol(an, x, xi) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("convexity ratio matches the analytic constant-coefficient values") {
  const double step = 1e-4;
  const double r_id = convexity_ratio(CoefficientField::identity(2), kX0,
                                      Point{0.3, 0.7}, Point{0.6, 0.8}, step);
  CHECK(r_id == doctest::Approx(8.0).epsilon(1e-10));
  CHECK(r_id == doctest::Approx(kOracleIdentity).epsilon(1e-5));

  const double r_sc = convexity_ratio(CoefficientField::scalar(2, 1.3), kX0,
                                      Point{0.3, 0.7}, Point{0.6, 0.8}, step);
  CHECK(r_sc == doctest::Approx(8.0 * std::pow(1.3, 4)).epsilon(1e-10));
  CHECK(r_sc == doctest::Approx(kOracleScalar13).epsilon(1e-5));
}

TEST_CASE("convexity ratio matches the bracket oracle on variable fields") {
  const double step = 1e-4;
  const CoefficientField v = var_diag();
  const Point x{0.5, 0.5};
  CHECK(convexity_ratio(v, kX0, x, Point{1.0, 0.0}, step) ==
        doctest::Approx(kOracleVarDiagE1).epsilon(2e-5));
  CHECK(convexity_ratio(v, kX0, x, Point{0.0, 1.0}, step) ==
        doctest::Approx(kOracleVarDiagE2).epsilon(2e-5));
  CHECK(convexity_ratio(v, kX0, x, Point{0.6, 0.8}, step) ==
        doctest::Approx(kOracleVarDiagMix).epsilon(2e-5));

  const CoefficientField an = aniso_field();
  CHECK(convexity_ratio(an, kX0, Point{0.25, 0.5}, Point{1.0, 0.0}, step) ==
        doctest::Approx(kOracleAniso1).epsilon(2e-5));
  CHECK(convexity_ratio(an, kX0, Point{0.75, 0.25}, Point{0.6, -0.8}, step) ==
        doctest::Approx(kOracleAniso2).epsilon(2e-5));
  CHECK(convexity_ratio(an, kX0, Point{0.5, 0.9}, Point{-0.28, 0.96}, step) ==
        doctest::Approx(kOracleAniso3).epsilon(2e-5));

  // Without analytic gradients the coefficient derivatives fall back to finite
  // differences; the ratio must agree with the analytic-gradient path.
  auto a11 = [](Point p) { return 1.0 + 0.2 * std::sin(kPi * p[0]) * std::sin(kPi * p[1]); };
  auto a12 = [](Point p) { return 0.1 * std::sin(kPi * p[0]) * std::cos(kPi * p[1]); };
  auto a22 = [](Point p) { return 1.0 + 0.15 * std::cos(kPi * p[0] / 2.0); };
  const CoefficientField fd = CoefficientField::general(2, a11, a12, a12, a22);
  CHECK(convexity_ratio(fd, kX0, Point{0.25, 0.5}, Point{1.0, 0.0}, step) ==
        doctest::Approx(kOracleAniso1).epsilon(2e-5));
}

TEST_CASE("convexity ratio is homogeneous of degree zero in the covector") {
  Rng rng(2026);
  const CoefficientField an = aniso_field();
  for (int trial = 0; trial < 16; ++trial) {
    const Point x{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    const double th = rng.uniform(0.0, 2.0 * kPi);
    const Point xi{std::cos(th), std::sin(th)};
    const double lambda = rng.uniform(0.1, 10.0);
    const Point xi_scaled{lambda * xi[0], lambda * xi[1]};
    const double base = convexity_ratio(an, kX0, x, xi, 1e-4);
    const double scaled = convexity_ratio(an, kX0, x, xi_scaled, 1e-4);
    CHECK(scaled == doctest::Approx(base).epsilon(1e-8));
  }
}

TEST_CASE("pseudo-convexity check passes the identity and rejects strong shear") {
  const Domain dom = unit_square(1.0 / 16);
  const PseudoConvexityReport ok = check_pseudo_convexity(CoefficientField::identity(2), dom, kX0);
  CHECK(ok.pass);
  CHECK(ok.min_ratio == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(ok.mu1 == doctest::Approx(ok.min_ratio));

  // Independent search over the same field found min ratio around -22.
  const PseudoConvexityReport bad = check_pseudo_convexity(shear_field(), dom, kX0);
  CHECK_FALSE(bad.pass);
  CHECK(bad.min_ratio < -1.0);
  CHECK(std::isfinite(bad.min_ratio));
}

TEST_CASE("observation boundary selects the faces seen from the exterior point") {
  const Domain dom = unit_square(0.125);

  const GammaMask near_left = observation_boundary(dom, Point{-0.5, 0.5});
  std::map<std::string, std::string> summary(near_left.face_summary.begin(),
                                             near_left.face_summary.end());
  CHECK(summary["x_lo"] == "none");
  CHECK(summary["x_hi"] == "all");
  CHECK(summary["y_lo"] == "all");
  CHECK(summary["y_hi"] == "all");
  for (std::size_t id : near_left.nodes) {
    CHECK(dom.boundary()[id].face != Face::x_lo);
  }
  // Every owned node of the selected faces is present.
  std::size_t expect = 0;
  for (const BoundaryNode& b : dom.boundary())
    if (b.face != Face::x_lo) ++expect;
  CHECK(near_left.nodes.size() == expect);

  const GammaMask near_bottom = observation_boundary(dom, Point{0.5, -0.5});
  summary = std::map<std::string, std::string>(near_bottom.face_summary.begin(),
                                               near_bottom.face_summary.end());
  CHECK(summary["x_lo"] == "all");
  CHECK(summary["x_hi"] == "all");
  CHECK(summary["y_lo"] == "none");
  CHECK(summary["y_hi"] == "all");

  CHECK_THROWS_AS(observation_boundary(dom, Point{0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("minimal observation time is the farthest distance over sqrt(beta)") {
  const Domain dom = unit_square(0.125);
  const double t1 = min_observation_time(dom, Point{-0.5, 0.5}, 1.0);
  CHECK(std::abs(t1 - std::sqrt(2.5)) < 1e-12);
  const double t4 = min_observation_time(dom, Point{-0.5, 0.5}, 4.0);
  CHECK(std::abs(t4 - 0.5 * std::sqrt(2.5)) < 1e-12);
  CHECK_THROWS_AS(min_observation_time(dom, Point{-0.5, 0.5}, 0.0), std::invalid_argument);
}

TEST_CASE("weight hits its normalization anchors") {
  const Domain dom = unit_square(0.125);
  const CarlemanWeight w = CarlemanWeight::normalized(dom, kX0, 1.0, 1.0);
  CHECK(w.scale == doctest::Approx(2.5).epsilon(1e-13));
  // Farthest corner at t = 0: psi = 1, phi = e.
  CHECK(w.psi(Point{1.0, 0.0}, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(w.phi(Point{1.0, 0.0}, 0.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-13));
  // On the light cone |x - x0|^2 = beta t^2: psi = 0, phi = 1.
  CHECK(w.psi(Point{0.0, 0.5}, 0.5) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(w.phi(Point{0.0, 0.5}, 0.5) == doctest::Approx(1.0).epsilon(1e-13));

  const CarlemanWeight raw{kX0, 1.0, 1.0, 1.0};
  CHECK(raw.psi(Point{1.0, 0.0}, 0.0) == doctest::Approx(2.5).epsilon(1e-13));
  CHECK(raw.phi(Point{1.0, 0.0}, 0.0) == doctest::Approx(std::exp(2.5)).epsilon(1e-13));

  // Larger gamma sharpens the weight monotonically where psi > 0.
  const CarlemanWeight w2 = CarlemanWeight::normalized(dom, kX0, 1.0, 2.0);
  CHECK(w2.phi(Point{1.0, 0.0}, 0.0) > w.phi(Point{1.0, 0.0}, 0.0));
}

TEST_CASE("cutoff is flat inside, zero outside, and smooth in between") {
  const CutoffFunction chi(1.7, 0.05);
  CHECK(chi.value(0.0) == doctest::Approx(1.0));
  CHECK(chi.value(1.6) == doctest::Approx(1.0));
  CHECK(chi.value(-1.6) == doctest::Approx(1.0));
  CHECK(chi.value(1.65) == doctest::Approx(0.0));
  CHECK(chi.value(2.0) == doctest::Approx(0.0));
  CHECK(chi.value(1.62) == doctest::Approx(chi.value(-1.62)).epsilon(1e-14));
  CHECK(chi.value(1.61) > chi.value(1.62));
  CHECK(chi.d1(0.0) == doctest::Approx(0.0));
  CHECK(std::abs(chi.d1(1.6)) < 1e-10);
  CHECK(std::abs(chi.d1(1.65)) < 1e-10);
  CHECK(std::abs(chi.d2(1.6)) < 1e-8);

  // Derivatives agree with finite differences inside the transition band.
  const double t = 1.625, fd = 1e-6;
  const double d1_fd = (chi.value(t + fd) - chi.value(t - fd)) / (2.0 * fd);
  const double d2_fd = (chi.value(t + fd) - 2.0 * chi.value(t) + chi.value(t - fd)) / (fd * fd);
  CHECK(chi.d1(t) == doctest::Approx(d1_fd).epsilon(1e-5));
  CHECK(chi.d2(t) == doctest::Approx(d2_fd).epsilon(1e-3));

  CHECK_THROWS_AS(CutoffFunction(1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(CutoffFunction(-1.0, 0.1), std::invalid_argument);
}

TEST_CASE("cutoff level calibration matches the closed-form extremes") {
  const Domain dom = unit_square(1.0 / 16);
  const CarlemanWeight w = CarlemanWeight::normalized(dom, kX0, 1.0, 1.0);

  // delta = exp(gamma (D - beta (T - 2 eps)^2) / D) with D = 2.5 at the
  // farthest corner and the inner band edge.
  const CutoffCalibration cal = calibrate_cutoff_levels(w, dom, 1.7, 0.05);
  CHECK(cal.delta == doctest::Approx(0.9762857097579094).epsilon(1e-12));
  CHECK(cal.eps0 == doctest::Approx(0.023714290242090597).epsilon(1e-10));
  CHECK(cal.valid);

  // T - 2 eps below the observation threshold pushes delta past 1.
  const CutoffCalibration bad = calibrate_cutoff_levels(w, dom, 1.6, 0.15);
  CHECK(bad.delta > 1.0);
  CHECK_FALSE(bad.valid);

  // T at or below the threshold itself is rejected outright.
  CHECK_THROWS_AS(calibrate_cutoff_levels(w, dom, 1.5, 0.05), std::invalid_argument);
}
