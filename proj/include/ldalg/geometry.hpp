#pragma once

#include <vector>

#include "ldalg/connection.hpp"
#include "ldalg/lagrangian.hpp"

namespace ldalg {

// Both blocks equal to the Hessian metric; pair it with canonical_n_connection.
DMetric sasaki_dmetric(const Lagrangian& L);
// Explicit blocks, assembled as given (unequal blocks allowed).
DMetric sasaki_dmetric(const std::vector<Expr>& h, const std::vector<Expr>& v, int m);

// Coordinate components of the d-metric, (n+m) x (n+m) row major. Needs n = m
// (the anchor is inverted symbolically); DimensionError otherwise.
std::vector<Expr> offdiagonal(const LieAlgebroid& alg, const DMetric& g, const NConnection& N);

// J delta_a = -V_a, J V_a = delta_a in frame components: J^alpha_beta at
// [alpha * 2m + beta], so J e_beta = J^alpha_beta e_alpha.
struct AlmostComplex {
  int m = 0;
  std::vector<double> J;
  double operator()(int alpha, int beta) const { return J[alpha * 2 * m + beta]; }
};
AlmostComplex almost_complex(int m);
// Coordinate components J^mu_nu = E_alpha^mu J^alpha_beta Einv^beta_nu at the
// frame-data point. Needs n = m and an invertible anchor.
std::vector<double> almost_complex_coordinates(const AlmostComplex& J, const FrameData& fd);

// N^phi_alpha_beta of J in the adapted frame, [(phi*D + alpha)*D + beta]:
// [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y] (order-0 values).
std::vector<double> nijenhuis(const AlmostComplex& J, const FrameData& fd);

// Exterior derivatives through the frame structure relations:
// (d w)(e_a, e_b) = e_a w_b - e_b w_a - W^f_ab w_f, [a*D + b];
std::vector<double> exterior_d1(const std::vector<Jet>& w, const FrameData& fd);
// (d theta)(e_a, e_b, e_c), [(a*D + b)*D + c].
std::vector<double> exterior_d2(const std::vector<Jet>& theta, const FrameData& fd);

// Frame components of w = 1/2 (dL/dy^a) X^a (vertical part zero).
std::vector<Jet> lagrangian_one_form(const Lagrangian& L, const FrameData& fd);

struct KahlerReport {
  double theta_minus_domega = 0.0;  // max |theta - d w|
  double dtheta = 0.0;              // max |d theta|
  double asymmetry = 0.0;           // max |theta + theta^T|
  double tolerance = 1e-8;
  std::vector<double> worst_point;
  bool pass() const { return theta_minus_domega <= tolerance && dtheta <= tolerance; }
};
// Canonical N-connection, Sasaki d-metric and theta = g(J., .) of L, checked
// at the points.
KahlerReport kahler_check(const Lagrangian& L, const LieAlgebroid& alg, const PointList& points,
                          double tol = 1e-8);
// Same checks for explicit geometry: theta from g and J, w supplied by the caller.
KahlerReport kahler_check(const GeometrySource& src, const std::vector<Expr>& w_h, const PointList& points,
                          double tol = 1e-8);

// Max relative |F(x, s y) - s F(x, y)| over the points for s in {0.5, 2, 3}.
double finsler_homogeneity_residual(const Expr& F, int n, int m, const PointList& points);
// L = F^2 after the homogeneity check (rel tol 1e-9); SpecError if F is not
// positively 1-homogeneous in y.
Lagrangian finsler_lagrangian(const Expr& F, int n, int m, const PointList& points);

}  // namespace ldalg
