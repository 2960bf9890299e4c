#pragma once

#include <utility>
#include <vector>

#include "ldalg/algebroid.hpp"

namespace ldalg {

// Regular Lagrangian L(x, y) over x1..xn, y(n+1)..y(n+m).
struct Lagrangian {
  int n = 0, m = 0;
  Expr L;
  // Regular-domain box, one interval per coordinate; empty means unbounded.
  std::vector<std::pair<double, double>> box;

  bool in_box(std::span<const double> p) const;
};

// Determinant and inverse of a k x k symbolic matrix by cofactors (k <= 4).
Expr symbolic_det(const std::vector<Expr>& A, int k);
std::vector<Expr> symbolic_inverse(const std::vector<Expr>& A, int k);

// d^2 L / dy^a dy^b, row major m x m.
std::vector<Expr> lagrangian_hessian(const Lagrangian& L);
// g_ab = 1/2 d^2 L / dy^a dy^b.
std::vector<Expr> hessian_metric(const Lagrangian& L);
// Smallest |det g| over the points; DegeneracyError naming the point when it
// falls below threshold.
double check_regular(const Lagrangian& L, const PointList& points, double threshold = 1e-12);

// phi^e = H^{eb}(rho^i_b dL/dx^i - rho^i_a d2L/dx^i dy^b y^a - C^f_ba dL/dy^f y^a)
// with H the full Hessian d^2 L / dy dy. Needs m <= 4.
std::vector<Expr> semispray(const Lagrangian& L, const LieAlgebroid& alg);
// Max |H phi - rhs| over the points for the linear system phi solves.
double semispray_residual(const Lagrangian& L, const LieAlgebroid& alg, const std::vector<Expr>& phi,
                          const PointList& points);
// Max |phi(x, s y) - s^2 phi(x, y)| over the points and s in {0.5, 2, 3}.
double spray_homogeneity_residual(const std::vector<Expr>& phi, int n, int m, const PointList& points);

// N^f_a = -1/2 (d phi^f / dy^a + y^b C^f_ba).
NConnection canonical_n_connection(const Lagrangian& L, const LieAlgebroid& alg);

}  // namespace ldalg
