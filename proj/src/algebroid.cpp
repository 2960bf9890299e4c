#include "ldalg/algebroid.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ldalg/jet.hpp"

namespace ldalg {

LieAlgebroid::LieAlgebroid(int n, int m)
    : n_(n), m_(m), coords_(Coords::standard(n, m)), rho_(n * m), C_(m * m * m) {
  if (n < 1 || m < 1) throw SpecError("algebroid dimensions must be at least 1");
  if (n + m > kMaxDim) throw SpecError("n + m must not exceed 8");
}

LieAlgebroid LieAlgebroid::trivial(int n) {
  LieAlgebroid alg(n, n);
  for (int i = 0; i < n; ++i) alg.set_rho(i, i, Expr::constant(1.0));
  return alg;
}

void LieAlgebroid::set_rho(int i, int a, Expr e) { rho_.at(i * m_ + a) = std::move(e); }

void LieAlgebroid::set_C(int f, int a, int b, Expr e) {
  if (a == b) {
    if (!simplify(e).is_const(0.0)) throw SpecError("C^f_aa must vanish");
    return;
  }
  C_.at((f * m_ + b) * m_ + a) = -e;
  C_.at((f * m_ + a) * m_ + b) = std::move(e);
}

void LieAlgebroid::validate() const {
  for (int i = 0; i < n_; ++i)
    for (int a = 0; a < m_; ++a)
      if (depends_on_range(rho(i, a), n_, n_ + m_))
        throw SpecError("anchor rho." + std::to_string(i + 1) + "." + std::to_string(a + 1) +
                        " depends on a fiber coordinate");
  for (int f = 0; f < m_; ++f)
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        if (depends_on_range(C(f, a, b), n_, n_ + m_))
          throw SpecError("structure function C." + std::to_string(f + 1) + "." + std::to_string(a + 1) + "." +
                          std::to_string(b + 1) + " depends on a fiber coordinate");
}

bool LieAlgebroid::has_structure() const {
  return std::any_of(C_.begin(), C_.end(), [](const Expr& e) { return !e.is_const(0.0); });
}

StructureReport verify_structure(const LieAlgebroid& alg, const PointList& points, double tol) {
  const int n = alg.n(), m = alg.m();
  StructureReport rep;
  rep.tolerance = tol;
  double worst = -1.0;
  for (const auto& p : points) {
    std::vector<Jet> rho(n * m), C(m * m * m);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) rho[i * m + a] = jet_eval(alg.rho(i, a), p, 1);
    for (int k = 0; k < m * m * m; ++k) C[k] = jet_eval(alg.C(k / (m * m), (k / m) % m, k % m), p, 1);
    auto Cj = [&](int f, int a, int b) -> const Jet& { return C[(f * m + a) * m + b]; };
    // rho^i_a d_i g along the anchor
    auto anchored = [&](int a, const Jet& g) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rho[i * m + a].v * g.d[i];
      return s;
    };
    double anchor = 0.0, jacobi = 0.0;
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
          double r = anchored(a, rho[j * m + b]) - anchored(b, rho[j * m + a]);
          for (int f = 0; f < m; ++f) r -= rho[j * m + f].v * Cj(f, a, b).v;
          anchor = std::max(anchor, std::fabs(r));
        }
    for (int f = 0; f < m; ++f)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int e = 0; e < m; ++e) {
            const int cyc[3][3] = {{a, b, e}, {b, e, a}, {e, a, b}};
            double r = 0.0;
            for (const auto& t : cyc) {
              r += anchored(t[0], Cj(f, t[1], t[2]));
              for (int d = 0; d < m; ++d) r += Cj(d, t[1], t[2]).v * Cj(f, t[0], d).v;
            }
            jacobi = std::max(jacobi, std::fabs(r));
          }
    rep.anchor_residual = std::max(rep.anchor_residual, anchor);
    rep.jacobi_residual = std::max(rep.jacobi_residual, jacobi);
    if (std::max(anchor, jacobi) > worst) {
      worst = std::max(anchor, jacobi);
      rep.worst_point = p;
    }
  }
  return rep;
}

double compatibility_residual(const NConnection& N, const LieAlgebroid& alg, const PointList& points) {
  if (!N.base) return 0.0;
  double r = 0.0;
  for (const auto& p : points)
    for (int A = 0; A < N.m; ++A)
      for (int a = 0; a < N.m; ++a) {
        double s = eval(N(A, a), p);
        for (int i = 0; i < N.n; ++i) s -= eval((*N.base)[A * N.n + i], p) * eval(alg.rho(i, a), p);
        r = std::max(r, std::fabs(s));
      }
  return r;
}

namespace {

void check_dims(const LieAlgebroid& alg, const NConnection& N) {
  if (N.n != alg.n() || N.m != alg.m() || static_cast<int>(N.coeffs.size()) != alg.m() * alg.m())
    throw DimensionError("N-connection dimensions do not match the algebroid");
}

// delta_b f = rho^i_b d_i f - N^D_b d_D f
Expr delta(const LieAlgebroid& alg, const NConnection& N, int b, const Expr& f) {
  Expr r;
  for (int i = 0; i < alg.n(); ++i)
    if (!alg.rho(i, b).is_const(0.0)) r = r + alg.rho(i, b) * diff(f, i);
  for (int D = 0; D < alg.m(); ++D)
    if (!N(D, b).is_const(0.0)) r = r - N(D, b) * diff(f, alg.n() + D);
  return simplify(r);
}

}  // namespace

Expr FramePair::apply(int alpha, const Expr& f) const {
  Expr r;
  for (int mu = 0; mu < n + m; ++mu) {
    const Expr& w = coord[alpha * (n + m) + mu];
    if (!w.is_const(0.0)) r = r + w * diff(f, mu);
  }
  return simplify(r);
}

FramePair adapted_frames(const LieAlgebroid& alg, const NConnection& N) {
  check_dims(alg, N);
  const int n = alg.n(), m = alg.m(), D = 2 * m, Nc = n + m;
  FramePair fp;
  fp.n = n;
  fp.m = m;
  fp.coord.assign(D * Nc, Expr());
  fp.frame.assign(D * D, Expr());
  fp.coframe.assign(D * D, Expr());
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) fp.coord[a * Nc + i] = alg.rho(i, a);
    for (int C = 0; C < m; ++C) fp.coord[a * Nc + n + C] = simplify(-N(C, a));
    fp.coord[(m + a) * Nc + n + a] = Expr::constant(1.0);
  }
  for (int al = 0; al < D; ++al) {
    fp.frame[al * D + al] = Expr::constant(1.0);
    fp.coframe[al * D + al] = Expr::constant(1.0);
  }
  for (int a = 0; a < m; ++a)
    for (int C = 0; C < m; ++C) {
      // delta_a = X_a - N^C_a V_C ;  delta^C = V^C + N^C_a X^a
      fp.frame[a * D + m + C] = simplify(-N(C, a));
      fp.coframe[(m + C) * D + a] = N(C, a);
    }
  return fp;
}

std::vector<double> frame_pairing(const FramePair& fp, std::span<const double> p) {
  const int D = fp.dim();
  std::vector<double> F(D * D), G(D * D), P(D * D, 0.0);
  for (int k = 0; k < D * D; ++k) {
    F[k] = eval(fp.frame[k], p);
    G[k] = eval(fp.coframe[k], p);
  }
  // <e_alpha, e^beta> = sum_k frame[alpha][k] * coframe[beta][k]
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be)
      for (int k = 0; k < D; ++k) P[al * D + be] += F[al * D + k] * G[be * D + k];
  return P;
}

std::vector<Expr> n_curvature(const LieAlgebroid& alg, const NConnection& N) {
  check_dims(alg, N);
  const int m = alg.m();
  std::vector<Expr> om(m * m * m);
  for (int C = 0; C < m; ++C)
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) {
        Expr r = delta(alg, N, b, N(C, a)) - delta(alg, N, a, N(C, b));
        for (int f = 0; f < m; ++f)
          if (!alg.C(f, a, b).is_const(0.0)) r = r + alg.C(f, a, b) * N(C, f);
        r = simplify(r);
        om[(C * m + a) * m + b] = r;
        om[(C * m + b) * m + a] = simplify(-r);
      }
  return om;
}

Expr AnholonomyCoeffs::W(int alpha, int beta, int gamma) const {
  const bool bh = beta < m, gh = gamma < m;
  if (bh && gh)
    return alpha < m ? C[(alpha * m + beta) * m + gamma] : Omega[((alpha - m) * m + beta) * m + gamma];
  if (bh && !gh) return alpha >= m ? dN[((alpha - m) * m + beta) * m + (gamma - m)] : Expr();
  if (!bh && gh) return simplify(-W(alpha, gamma, beta));
  return Expr();
}

AnholonomyCoeffs anholonomy(const LieAlgebroid& alg, const NConnection& N) {
  check_dims(alg, N);
  const int m = alg.m();
  AnholonomyCoeffs w;
  w.m = m;
  w.C.resize(m * m * m);
  for (int f = 0; f < m; ++f)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) w.C[(f * m + a) * m + b] = alg.C(f, a, b);
  w.Omega = n_curvature(alg, N);
  w.dN.resize(m * m * m);
  for (int C = 0; C < m; ++C)
    for (int a = 0; a < m; ++a)
      for (int B = 0; B < m; ++B) w.dN[(C * m + a) * m + B] = simplify(diff(N(C, a), alg.n() + B));
  return w;
}

PointList random_points(const std::vector<std::pair<double, double>>& box, int count, unsigned long long seed) {
  // Explicit 53-bit mapping keeps the sequence identical across standard libraries.
  std::mt19937_64 g(seed);
  PointList pts(count, std::vector<double>(box.size()));
  for (auto& p : pts)
    for (std::size_t k = 0; k < box.size(); ++k) {
      const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
      p[k] = box[k].first + u * (box[k].second - box[k].first);
    }
  return pts;
}

}  // namespace ldalg
