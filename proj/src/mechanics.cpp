#include "ldalg/mechanics.hpp"

#include <cmath>
#include <stdexcept>

namespace ldalg {

namespace {

std::vector<double> join(const PathState& s) {
  std::vector<double> p(s.x);
  p.insert(p.end(), s.y.begin(), s.y.end());
  return p;
}

}  // namespace

std::vector<PathState> integrate_semispray(const Lagrangian& L, const LieAlgebroid& alg, const PathState& init,
                                           int steps, double dtau) {
  const int n = L.n, m = L.m, Nc = n + m;
  if (static_cast<int>(init.x.size()) != n || static_cast<int>(init.y.size()) != m)
    throw DimensionError("initial state does not match (n, m)");
  if (steps < 0 || !(dtau > 0)) throw std::invalid_argument("steps must be >= 0 and dtau > 0");
  const auto phi = semispray(L, alg);
  auto rhs = [&](const std::vector<double>& p) {
    std::vector<double> r(Nc, 0.0);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a)
        if (!alg.rho(i, a).is_const(0.0)) r[i] += eval(alg.rho(i, a), p) * p[n + a];
    for (int a = 0; a < m; ++a) r[n + a] = eval(phi[a], p);
    return r;
  };
  std::vector<PathState> out;
  out.reserve(steps + 1);
  out.push_back(init);
  std::vector<double> p = join(init), tmp(Nc);
  for (int s = 0; s < steps; ++s) {
    auto k1 = rhs(p);
    for (int k = 0; k < Nc; ++k) tmp[k] = p[k] + 0.5 * dtau * k1[k];
    auto k2 = rhs(tmp);
    for (int k = 0; k < Nc; ++k) tmp[k] = p[k] + 0.5 * dtau * k2[k];
    auto k3 = rhs(tmp);
    for (int k = 0; k < Nc; ++k) tmp[k] = p[k] + dtau * k3[k];
    auto k4 = rhs(tmp);
    for (int k = 0; k < Nc; ++k) {
      p[k] += dtau / 6.0 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
      if (!std::isfinite(p[k])) throw NumericError("non-finite state at step " + std::to_string(s + 1));
    }
    if (!L.in_box(p)) throw NumericError("path left the regular box at step " + std::to_string(s + 1));
    PathState st;
    st.tau = init.tau + (s + 1) * dtau;
    st.x.assign(p.begin(), p.begin() + n);
    st.y.assign(p.begin() + n, p.end());
    out.push_back(std::move(st));
  }
  return out;
}

ELResidual euler_lagrange_residual(const Lagrangian& L, const LieAlgebroid& alg, const std::vector<PathState>& path) {
  if (path.size() < 3) throw std::invalid_argument("path needs at least 3 samples");
  const int n = L.n, m = L.m;
  std::vector<Expr> dLdy(m), dLdx(n);
  for (int a = 0; a < m; ++a) dLdy[a] = simplify(diff(L.L, n + a));
  for (int i = 0; i < n; ++i) dLdx[i] = simplify(diff(L.L, i));
  ELResidual res;
  res.per_step.assign(path.size(), 0.0);
  std::vector<std::vector<double>> py(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    auto p = join(path[k]);
    py[k].resize(m);
    for (int a = 0; a < m; ++a) py[k][a] = eval(dLdy[a], p);
  }
  for (std::size_t k = 1; k + 1 < path.size(); ++k) {
    const double h2 = path[k + 1].tau - path[k - 1].tau;
    const auto p = join(path[k]);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = (path[k + 1].x[i] - path[k - 1].x[i]) / h2;
      for (int a = 0; a < m; ++a) r -= eval(alg.rho(i, a), p) * path[k].y[a];
      res.kinematic = std::max(res.kinematic, std::fabs(r));
      worst = std::max(worst, std::fabs(r));
    }
    for (int a = 0; a < m; ++a) {
      double r = (py[k + 1][a] - py[k - 1][a]) / h2;
      for (int b = 0; b < m; ++b)
        for (int f = 0; f < m; ++f)
          if (!alg.C(f, a, b).is_const(0.0)) r += path[k].y[b] * eval(alg.C(f, a, b), p) * py[k][f];
      for (int i = 0; i < n; ++i)
        if (!alg.rho(i, a).is_const(0.0)) r -= eval(alg.rho(i, a), p) * eval(dLdx[i], p);
      res.dynamic = std::max(res.dynamic, std::fabs(r));
      worst = std::max(worst, std::fabs(r));
    }
    res.per_step[k] = worst;
  }
  return res;
}

CartanData cartan_data(const Lagrangian& L, const LieAlgebroid& alg) {
  const int n = L.n, m = L.m, D = 2 * m;
  if (alg.n() != n || alg.m() != m) throw DimensionError("Lagrangian and algebroid dimensions differ");
  CartanData c;
  c.m = m;
  c.theta_L.resize(m);
  for (int a = 0; a < m; ++a) c.theta_L[a] = simplify(diff(L.L, n + a));
  Expr e;
  for (int a = 0; a < m; ++a) e = e + Expr::var(n + a) * c.theta_L[a];
  c.energy = simplify(e - L.L);
  const auto H = lagrangian_hessian(L);
  c.omega_L.assign(D * D, Expr());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      c.omega_L[a * D + m + b] = H[a * m + b];
      c.omega_L[(m + b) * D + a] = simplify(-H[a * m + b]);
    }
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      Expr s;
      for (int i = 0; i < n; ++i) {
        if (!alg.rho(i, a).is_const(0.0)) s = s + alg.rho(i, a) * diff(c.theta_L[b], i);
        if (!alg.rho(i, b).is_const(0.0)) s = s - alg.rho(i, b) * diff(c.theta_L[a], i);
      }
      for (int f = 0; f < m; ++f)
        if (!alg.C(f, a, b).is_const(0.0)) s = s + alg.C(f, a, b) * c.theta_L[f];
      s = simplify(0.5 * s);
      c.omega_L[a * D + b] = s;
      c.omega_L[b * D + a] = simplify(-s);
    }
  return c;
}

double energy(const CartanData& c, const PathState& s) { return eval(c.energy, join(s)); }

}  // namespace ldalg
