#include "ldalg/lagrangian.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace ldalg {

bool Lagrangian::in_box(std::span<const double> p) const {
  if (box.empty()) return true;
  for (std::size_t k = 0; k < box.size() && k < p.size(); ++k)
    if (p[k] < box[k].first || p[k] > box[k].second) return false;
  return true;
}

namespace {

void check_lagrangian(const Lagrangian& L, const LieAlgebroid& alg) {
  if (L.n != alg.n() || L.m != alg.m()) throw DimensionError("Lagrangian and algebroid dimensions differ");
}

std::vector<Expr> minor(const std::vector<Expr>& A, int k, int row, int col) {
  std::vector<Expr> M;
  M.reserve((k - 1) * (k - 1));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != row && j != col) M.push_back(A[i * k + j]);
  return M;
}

std::string point_text(std::span<const double> p) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

Expr symbolic_det(const std::vector<Expr>& A, int k) {
  if (k < 1 || k > 4) throw DimensionError("symbolic determinant supports 1 <= k <= 4");
  if (k == 1) return A[0];
  if (k == 2) return simplify(A[0] * A[3] - A[1] * A[2]);
  Expr d;
  for (int j = 0; j < k; ++j) {
    if (A[j].is_const(0.0)) continue;
    Expr c = A[j] * symbolic_det(minor(A, k, 0, j), k - 1);
    d = j % 2 == 0 ? d + c : d - c;
  }
  return simplify(d);
}

std::vector<Expr> symbolic_inverse(const std::vector<Expr>& A, int k) {
  const Expr det = symbolic_det(A, k);
  if (det.is_const(0.0)) throw DegeneracyError("matrix is identically singular");
  std::vector<Expr> inv(k * k);
  if (k == 1) {
    inv[0] = simplify(1.0 / det);
    return inv;
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      // inverse[i][j] = cofactor[j][i] / det
      Expr c = symbolic_det(minor(A, k, j, i), k - 1);
      if ((i + j) % 2) c = -c;
      inv[i * k + j] = simplify(c / det);
    }
  return inv;
}

std::vector<Expr> lagrangian_hessian(const Lagrangian& L) {
  const int n = L.n, m = L.m;
  std::vector<Expr> H(m * m);
  for (int a = 0; a < m; ++a) {
    Expr da = simplify(diff(L.L, n + a));
    for (int b = a; b < m; ++b) H[a * m + b] = H[b * m + a] = simplify(diff(da, n + b));
  }
  return H;
}

std::vector<Expr> hessian_metric(const Lagrangian& L) {
  auto H = lagrangian_hessian(L);
  for (auto& e : H) e = simplify(0.5 * e);
  return H;
}

double check_regular(const Lagrangian& L, const PointList& points, double threshold) {
  const int m = L.m;
  const auto g = hessian_metric(L);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    Eigen::MatrixXd M(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) M(a, b) = eval(g[a * m + b], p);
    const double d = std::fabs(M.determinant());
    if (!(d > threshold)) throw DegeneracyError("Hessian metric is degenerate at " + point_text(p));
    worst = std::min(worst, d);
  }
  return worst;
}

namespace {

// Right-hand side of H phi = rhs, one entry per b.
std::vector<Expr> semispray_rhs(const Lagrangian& L, const LieAlgebroid& alg) {
  const int n = L.n, m = L.m;
  std::vector<Expr> dy(m);
  for (int f = 0; f < m; ++f) dy[f] = simplify(diff(L.L, n + f));
  std::vector<Expr> rhs(m);
  for (int b = 0; b < m; ++b) {
    Expr r;
    for (int i = 0; i < n; ++i) {
      if (!alg.rho(i, b).is_const(0.0)) r = r + alg.rho(i, b) * diff(L.L, i);
      Expr dxy = simplify(diff(dy[b], i));
      if (dxy.is_const(0.0)) continue;
      for (int a = 0; a < m; ++a)
        if (!alg.rho(i, a).is_const(0.0)) r = r - alg.rho(i, a) * dxy * Expr::var(n + a);
    }
    for (int f = 0; f < m; ++f)
      for (int a = 0; a < m; ++a)
        if (!alg.C(f, b, a).is_const(0.0)) r = r - alg.C(f, b, a) * dy[f] * Expr::var(n + a);
    rhs[b] = simplify(r);
  }
  return rhs;
}

}  // namespace

std::vector<Expr> semispray(const Lagrangian& L, const LieAlgebroid& alg) {
  check_lagrangian(L, alg);
  const int m = L.m;
  if (m > 4) throw DimensionError("symbolic semispray supports m <= 4");
  const auto Hinv = symbolic_inverse(lagrangian_hessian(L), m);
  const auto rhs = semispray_rhs(L, alg);
  std::vector<Expr> phi(m);
  for (int e = 0; e < m; ++e) {
    Expr s;
    for (int b = 0; b < m; ++b)
      if (!Hinv[e * m + b].is_const(0.0) && !rhs[b].is_const(0.0)) s = s + Hinv[e * m + b] * rhs[b];
    phi[e] = simplify(s);
  }
  return phi;
}

double semispray_residual(const Lagrangian& L, const LieAlgebroid& alg, const std::vector<Expr>& phi,
                          const PointList& points) {
  check_lagrangian(L, alg);
  const int m = L.m;
  const auto H = lagrangian_hessian(L);
  const auto rhs = semispray_rhs(L, alg);
  double r = 0.0;
  for (const auto& p : points)
    for (int b = 0; b < m; ++b) {
      double s = -eval(rhs[b], p);
      for (int e = 0; e < m; ++e) s += eval(H[b * m + e], p) * eval(phi[e], p);
      r = std::max(r, std::fabs(s));
    }
  return r;
}

double spray_homogeneity_residual(const std::vector<Expr>& phi, int n, int m, const PointList& points) {
  double r = 0.0;
  for (const auto& p : points)
    for (double s : {0.5, 2.0, 3.0}) {
      std::vector<double> q = p;
      for (int a = 0; a < m; ++a) q[n + a] *= s;
      for (const auto& e : phi) r = std::max(r, std::fabs(eval(e, q) - s * s * eval(e, p)));
    }
  return r;
}

NConnection canonical_n_connection(const Lagrangian& L, const LieAlgebroid& alg) {
  const int n = L.n, m = L.m;
  const auto phi = semispray(L, alg);
  NConnection N(n, m);
  for (int f = 0; f < m; ++f)
    for (int a = 0; a < m; ++a) {
      Expr s = diff(phi[f], n + a);
      for (int b = 0; b < m; ++b)
        if (!alg.C(f, b, a).is_const(0.0)) s = s + Expr::var(n + b) * alg.C(f, b, a);
      N(f, a) = simplify(-0.5 * s);
    }
  return N;
}

}  // namespace ldalg
