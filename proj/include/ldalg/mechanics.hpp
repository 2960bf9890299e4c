#pragma once

#include <vector>

#include "ldalg/lagrangian.hpp"

namespace ldalg {

struct PathState {
  double tau = 0.0;
  std::vector<double> x, y;
};

// Classical RK4 for x'^i = rho^i_a(x) y^a, y'^a = phi^a(x, y). Throws
// NumericError when the state leaves the Lagrangian's box or turns non-finite.
std::vector<PathState> integrate_semispray(const Lagrangian& L, const LieAlgebroid& alg, const PathState& init,
                                           int steps, double dtau);

struct ELResidual {
  double kinematic = 0.0;  // max |dx^i/dtau - rho^i_a y^a|
  double dynamic = 0.0;    // max |d/dtau(dL/dy^a) + y^b C^f_ab dL/dy^f - rho^i_a dL/dx^i|
  std::vector<double> per_step;  // max of both at each interior sample (ends are 0)
  double max() const { return std::max(kinematic, dynamic); }
};
// Time derivatives by central differences on the samples (uniform in tau).
// Throws std::invalid_argument for fewer than 3 samples.
ELResidual euler_lagrange_residual(const Lagrangian& L, const LieAlgebroid& alg, const std::vector<PathState>& path);

struct CartanData {
  int m = 0;
  std::vector<Expr> theta_L;  // dL/dy^a, weights of X^a
  // Coefficients in omega_L = H_ab X^a ^ V^b + 1/2 c_ab X^a ^ X^b, stored as a
  // 2m x 2m antisymmetric array: [a][m+b] = H_ab, [a][b] = 1/2 c_ab with
  // c_ab = rho^i_a d2L/dx^i dy^b - rho^i_b d2L/dx^i dy^a + C^f_ab dL/dy^f.
  std::vector<Expr> omega_L;
  Expr energy;  // y^a dL/dy^a - L
};
CartanData cartan_data(const Lagrangian& L, const LieAlgebroid& alg);

double energy(const CartanData& c, const PathState& s);

}  // namespace ldalg
