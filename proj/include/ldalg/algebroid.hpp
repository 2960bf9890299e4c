#pragma once

#include <optional>
#include <vector>

#include "ldalg/expr.hpp"

namespace ldalg {

using PointList = std::vector<std::vector<double>>;

// Anchor rho^i_a(x) and structure functions C^f_ab(x) over coordinates
// x1..xn, y(n+1)..y(n+m). Index arguments are 0-based throughout.
class LieAlgebroid {
 public:
  LieAlgebroid() = default;
  LieAlgebroid(int n, int m);
  // n = m, rho = identity, C = 0.
  static LieAlgebroid trivial(int n);

  int n() const { return n_; }
  int m() const { return m_; }
  const Coords& coords() const { return coords_; }
  Coords& coords() { return coords_; }

  const Expr& rho(int i, int a) const { return rho_[i * m_ + a]; }
  void set_rho(int i, int a, Expr e);
  const Expr& C(int f, int a, int b) const { return C_[(f * m_ + a) * m_ + b]; }
  // Sets C^f_ab and C^f_ba = -C^f_ab.
  void set_C(int f, int a, int b, Expr e);

  // Throws SpecError if any anchor or structure function depends on y.
  void validate() const;
  bool has_structure() const;

 private:
  int n_ = 0, m_ = 0;
  Coords coords_;
  std::vector<Expr> rho_, C_;
};

// Coefficients N^A_a(x, y) of an N-connection, with optional base form N^A_i.
struct NConnection {
  int n = 0, m = 0;
  std::vector<Expr> coeffs;               // [A * m + a]
  std::optional<std::vector<Expr>> base;  // [A * n + i]

  NConnection() = default;
  NConnection(int n_, int m_) : n(n_), m(m_), coeffs(m_ * m_) {}
  const Expr& operator()(int A, int a) const { return coeffs[A * m + a]; }
  Expr& operator()(int A, int a) { return coeffs[A * m + a]; }
};

struct StructureReport {
  double anchor_residual = 0.0;
  double jacobi_residual = 0.0;
  double tolerance = 1e-9;
  std::vector<double> worst_point;
  bool pass() const { return anchor_residual <= tolerance && jacobi_residual <= tolerance; }
};

// Anchor identity and cyclic Jacobi identity residuals over the points.
StructureReport verify_structure(const LieAlgebroid& alg, const PointList& points, double tol = 1e-9);

// Max |N^A_a - N^A_i rho^i_a| over the points; 0 if no base form is set.
double compatibility_residual(const NConnection& N, const LieAlgebroid& alg, const PointList& points);

// N-adapted frames e_alpha = E_alpha^mu d_mu in coordinate components
// (alpha < m: delta_a, alpha >= m: V_A), and the frame/coframe matrices in
// the algebroid basis (X_a, V_A), whose product must be the identity.
struct FramePair {
  int n = 0, m = 0;
  std::vector<Expr> coord;    // [alpha * (n+m) + mu]
  std::vector<Expr> frame;    // rows e_alpha in (X_a, V_A) components, 2m x 2m
  std::vector<Expr> coframe;  // columns e^beta in (X^a, V^A) components, 2m x 2m
  int dim() const { return 2 * m; }
  // Frame derivative e_alpha f as an expression.
  Expr apply(int alpha, const Expr& f) const;
};

FramePair adapted_frames(const LieAlgebroid& alg, const NConnection& N);
// 2m x 2m pairing matrix <e_alpha, e^beta> at p.
std::vector<double> frame_pairing(const FramePair& fp, std::span<const double> p);

// Omega^C_ab = delta_b N^C_a - delta_a N^C_b + C^f_ab N^C_f, [(C*m + a)*m + b].
std::vector<Expr> n_curvature(const LieAlgebroid& alg, const NConnection& N);

struct AnholonomyCoeffs {
  int m = 0;
  std::vector<Expr> C;      // C^f_ab,   [(f*m + a)*m + b]
  std::vector<Expr> Omega;  // Omega^C_ab, [(C*m + a)*m + b]
  std::vector<Expr> dN;     // d N^C_a / d y^B, [(C*m + a)*m + B]
  // Full W^alpha_beta_gamma with [e_beta, e_gamma] = W^alpha_beta_gamma e_alpha.
  Expr W(int alpha, int beta, int gamma) const;
};

AnholonomyCoeffs anholonomy(const LieAlgebroid& alg, const NConnection& N);

// Random points in a box [lo_k, hi_k] per coordinate, reproducible from seed.
PointList random_points(const std::vector<std::pair<double, double>>& box, int count, unsigned long long seed);

}  // namespace ldalg
