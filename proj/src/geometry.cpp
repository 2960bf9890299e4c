#include "ldalg/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace ldalg {

DMetric sasaki_dmetric(const Lagrangian& L) {
  const auto g = hessian_metric(L);
  return sasaki_dmetric(g, g, L.m);
}

DMetric sasaki_dmetric(const std::vector<Expr>& h, const std::vector<Expr>& v, int m) {
  if (static_cast<int>(h.size()) != m * m || static_cast<int>(v.size()) != m * m)
    throw DimensionError("metric blocks must be m x m");
  DMetric g(m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      g.set_h(a, b, h[a * m + b]);
      g.set_v(a, b, v[a * m + b]);
    }
  return g;
}

std::vector<Expr> offdiagonal(const LieAlgebroid& alg, const DMetric& g, const NConnection& N) {
  const int n = alg.n(), m = alg.m(), Nc = n + m;
  if (n != m) throw DimensionError("coordinate form needs n = m (invertible anchor)");
  if (N.m != m || g.m() != m) throw DimensionError("metric, N-connection and algebroid disagree on m");
  std::vector<Expr> rho(n * m);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) rho[i * m + a] = alg.rho(i, a);
  // rbar[a][i]: d_i = rbar^a_i X_a
  const auto rbar = symbolic_inverse(rho, m);
  // d_i = rbar^a_i (delta_a + N^C_a V_C): h-weights P[i][a], v-weights Q[i][C].
  std::vector<Expr> Q(n * m);
  for (int i = 0; i < n; ++i)
    for (int C = 0; C < m; ++C) {
      Expr s;
      for (int a = 0; a < m; ++a)
        if (!rbar[a * n + i].is_const(0.0) && !N(C, a).is_const(0.0)) s = s + rbar[a * n + i] * N(C, a);
      Q[i * m + C] = simplify(s);
    }
  std::vector<Expr> G(Nc * Nc);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Expr s;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          if (!rbar[a * n + i].is_const(0.0) && !rbar[b * n + j].is_const(0.0) && !g.h(a, b).is_const(0.0))
            s = s + rbar[a * n + i] * rbar[b * n + j] * g.h(a, b);
      for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
          if (!Q[i * m + A].is_const(0.0) && !Q[j * m + B].is_const(0.0) && !g.v(A, B).is_const(0.0))
            s = s + Q[i * m + A] * Q[j * m + B] * g.v(A, B);
      G[i * Nc + j] = G[j * Nc + i] = simplify(s);
    }
  for (int i = 0; i < n; ++i)
    for (int B = 0; B < m; ++B) {
      Expr s;
      for (int A = 0; A < m; ++A)
        if (!Q[i * m + A].is_const(0.0) && !g.v(A, B).is_const(0.0)) s = s + Q[i * m + A] * g.v(A, B);
      G[i * Nc + n + B] = G[(n + B) * Nc + i] = simplify(s);
    }
  for (int A = 0; A < m; ++A)
    for (int B = 0; B < m; ++B) G[(n + A) * Nc + n + B] = g.v(A, B);
  return G;
}

AlmostComplex almost_complex(int m) {
  if (m < 1) throw DimensionError("almost complex structure needs m >= 1");
  AlmostComplex J{m, std::vector<double>(4 * m * m, 0.0)};
  const int D = 2 * m;
  for (int a = 0; a < m; ++a) {
    J.J[(m + a) * D + a] = -1.0;  // J delta_a = -V_a
    J.J[a * D + m + a] = 1.0;     // J V_a = delta_a
  }
  return J;
}

std::vector<double> almost_complex_coordinates(const AlmostComplex& J, const FrameData& fd) {
  const int n = fd.n(), m = fd.m(), D = fd.D(), Nc = n + m;
  if (n != m || J.m != m) throw DimensionError("coordinate form of J needs n = m");
  Eigen::MatrixXd E(D, Nc), Jf(D, D);
  for (int al = 0; al < D; ++al) {
    for (int mu = 0; mu < Nc; ++mu) E(al, mu) = fd.E(al, mu).v;
    for (int be = 0; be < D; ++be) Jf(al, be) = J(al, be);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(E);
  if (!lu.isInvertible()) throw DegeneracyError("frame matrix is singular (anchor not invertible)");
  // vector with frame components v^beta has coordinate components v^beta E(beta, mu)
  const Eigen::MatrixXd Einv = lu.inverse();
  const Eigen::MatrixXd Jc = E.transpose() * Jf * Einv.transpose();
  std::vector<double> out(Nc * Nc);
  for (int mu = 0; mu < Nc; ++mu)
    for (int nu = 0; nu < Nc; ++nu) out[mu * Nc + nu] = Jc(mu, nu);
  return out;
}

std::vector<double> nijenhuis(const AlmostComplex& J, const FrameData& fd) {
  const int D = fd.D();
  if (J.m != fd.m()) throw DimensionError("J and frame data disagree on m");
  auto W = [&](int a, int b, int c) { return fd.W(a, b, c).v; };
  // [Je_a, Je_b] = J^g_a J^d_b W^f_gd, and so on, J constant in the frame.
  std::vector<double> out(D * D * D, 0.0);
  for (int ph = 0; ph < D; ++ph)
    for (int al = 0; al < D; ++al)
      for (int be = 0; be < D; ++be) {
        double s = -W(ph, al, be);
        for (int ga = 0; ga < D; ++ga) {
          if (J(ga, al) == 0.0) continue;
          for (int de = 0; de < D; ++de)
            if (J(de, be) != 0.0) s += J(ga, al) * J(de, be) * W(ph, ga, de);
        }
        for (int ps = 0; ps < D; ++ps) {
          if (J(ph, ps) == 0.0) continue;
          for (int ga = 0; ga < D; ++ga) {
            if (J(ga, al) != 0.0) s -= J(ph, ps) * J(ga, al) * W(ps, ga, be);
            if (J(ga, be) != 0.0) s -= J(ph, ps) * J(ga, be) * W(ps, al, ga);
          }
        }
        out[idx3(D, ph, al, be)] = s;
      }
  return out;
}

std::vector<double> exterior_d1(const std::vector<Jet>& w, const FrameData& fd) {
  const int D = fd.D();
  std::vector<double> out(D * D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      double s = fd.e(a, w[b]).v - fd.e(b, w[a]).v;
      for (int f = 0; f < D; ++f) s -= fd.W(f, a, b).v * w[f].v;
      out[a * D + b] = s;
    }
  return out;
}

std::vector<double> exterior_d2(const std::vector<Jet>& th, const FrameData& fd) {
  const int D = fd.D();
  std::vector<double> de(D * D * D);  // e_c theta_ab at [(c*D + a)*D + b]
  for (int c = 0; c < D; ++c)
    for (int k = 0; k < D * D; ++k) de[c * D * D + k] = th[k].is_zero() ? 0.0 : fd.e(c, th[k]).v;
  auto t = [&](int a, int b) { return th[a * D + b].v; };
  std::vector<double> out(D * D * D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c) {
        double s = de[a * D * D + b * D + c] - de[b * D * D + a * D + c] + de[c * D * D + a * D + b];
        for (int f = 0; f < D; ++f)
          s -= fd.W(f, a, b).v * t(f, c) - fd.W(f, a, c).v * t(f, b) + fd.W(f, b, c).v * t(f, a);
        out[idx3(D, a, b, c)] = s;
      }
  return out;
}

std::vector<Jet> lagrangian_one_form(const Lagrangian& L, const FrameData& fd) {
  const int m = fd.m(), n = fd.n();
  std::vector<Jet> w(fd.D(), fd.zero(2));
  for (int a = 0; a < m; ++a) w[a] = 0.5 * jet_eval(diff(L.L, n + a), fd.point());
  return w;
}

namespace {

void accumulate(KahlerReport& rep, const FrameData& fd, const std::vector<Jet>& w, double& worst) {
  const int D = fd.D();
  const auto th = canonical_symplectic_form()(fd);
  const auto dw = exterior_d1(w, fd);
  const auto dth = exterior_d2(th, fd);
  double r1 = 0.0, asym = 0.0;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      r1 = std::max(r1, std::fabs(th[a * D + b].v - dw[a * D + b]));
      asym = std::max(asym, std::fabs(th[a * D + b].v + th[b * D + a].v));
    }
  const double r2 = max_abs(dth);
  rep.theta_minus_domega = std::max(rep.theta_minus_domega, r1);
  rep.dtheta = std::max(rep.dtheta, r2);
  rep.asymmetry = std::max(rep.asymmetry, asym);
  if (std::max(r1, r2) > worst) {
    worst = std::max(r1, r2);
    rep.worst_point.assign(fd.point().begin(), fd.point().end());
  }
}

}  // namespace

KahlerReport kahler_check(const Lagrangian& L, const LieAlgebroid& alg, const PointList& points, double tol) {
  check_regular(L, points);
  const NConnection N = canonical_n_connection(L, alg);
  const auto src = symbolic_source(alg, N, sasaki_dmetric(L));
  KahlerReport rep;
  rep.tolerance = tol;
  double worst = -1.0;
  for (const auto& p : points) {
    FrameData fd(src(p));
    accumulate(rep, fd, lagrangian_one_form(L, fd), worst);
  }
  return rep;
}

KahlerReport kahler_check(const GeometrySource& src, const std::vector<Expr>& w_h, const PointList& points,
                          double tol) {
  KahlerReport rep;
  rep.tolerance = tol;
  double worst = -1.0;
  for (const auto& p : points) {
    FrameData fd(src(p));
    if (static_cast<int>(w_h.size()) != fd.m()) throw DimensionError("one-form needs m components");
    std::vector<Jet> w(fd.D(), fd.zero(2));
    for (int a = 0; a < fd.m(); ++a) w[a] = jet_eval(w_h[a], p);
    accumulate(rep, fd, w, worst);
  }
  return rep;
}

double finsler_homogeneity_residual(const Expr& F, int n, int m, const PointList& points) {
  double r = 0.0;
  for (const auto& p : points) {
    const double f0 = eval(F, p);
    for (double s : {0.5, 2.0, 3.0}) {
      std::vector<double> q = p;
      for (int a = 0; a < m; ++a) q[n + a] *= s;
      r = std::max(r, std::fabs(eval(F, q) - s * f0) / std::max(std::fabs(s * f0), 1e-300));
    }
  }
  return r;
}

Lagrangian finsler_lagrangian(const Expr& F, int n, int m, const PointList& points) {
  const double r = finsler_homogeneity_residual(F, n, m, points);
  if (!(r <= 1e-9)) throw SpecError("F is not positively 1-homogeneous in y (residual " + std::to_string(r) + ")");
  Lagrangian L;
  L.n = n;
  L.m = m;
  L.L = simplify(pow(F, Expr::constant(2)));
  return L;
}

}  // namespace ldalg
