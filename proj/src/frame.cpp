#include "ldalg/frame.hpp"

namespace ldalg {

GeometrySource symbolic_source(const LieAlgebroid& alg, const NConnection& N, const DMetric& g) {
  const int n = alg.n(), m = alg.m();
  if (N.m != m || g.m() != m) throw DimensionError("geometry inputs disagree on m");
  return [alg, N, g, n, m](std::span<const double> p) {
    if (static_cast<int>(p.size()) != n + m) throw DimensionError("point dimension is not n + m");
    GeometryJets j;
    j.n = n;
    j.m = m;
    j.point.assign(p.begin(), p.end());
    j.rho.resize(n * m);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) j.rho[i * m + a] = jet_eval(alg.rho(i, a), p);
    j.C.resize(m * m * m);
    for (int f = 0; f < m; ++f)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) j.C[(f * m + a) * m + b] = jet_eval(alg.C(f, a, b), p);
    j.N.resize(m * m);
    j.gh.resize(m * m);
    j.gv.resize(m * m);
    for (int k = 0; k < m * m; ++k) {
      j.N[k] = jet_eval(N.coeffs[k], p);
      j.gh[k] = jet_eval(g.h_block()[k], p);
      j.gv[k] = jet_eval(g.v_block()[k], p);
    }
    return j;
  };
}

FrameData::FrameData(GeometryJets geo) : n_(geo.n), m_(geo.m), geo_(std::move(geo)) {
  const int n = n_, m = m_, D = 2 * m, Nc = n + m;
  const Jet zero2 = zero(2);
  E_.assign(D * Nc, zero2);
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) E_[a * Nc + i] = geo_.rho[i * m + a];
    for (int C = 0; C < m; ++C) E_[a * Nc + n + C] = -geo_.N[C * m + a];
    E_[(m + a) * Nc + n + a] = Jet::constant(Nc, 1.0, 2);
  }
  Ezero_.resize(E_.size());
  for (std::size_t k = 0; k < E_.size(); ++k) Ezero_[k] = E_[k].is_zero();

  const Jet zero1 = zero(1);
  W_.assign(D * D * D, zero1);
  auto Wref = [&](int al, int be, int ga) -> Jet& { return W_[(al * D + be) * D + ga]; };
  auto Nj = [&](int C, int a) -> const Jet& { return geo_.N[C * m + a]; };
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      for (int f = 0; f < m; ++f) Wref(f, a, b) = truncate(geo_.C[(f * m + a) * m + b], 1);
      for (int C = 0; C < m; ++C) {
        // Omega^C_ab = delta_b N^C_a - delta_a N^C_b + C^f_ab N^C_f
        Jet om = e(b, Nj(C, a)) - e(a, Nj(C, b));
        for (int f = 0; f < m; ++f) fma_acc(om, geo_.C[(f * m + a) * m + b], Nj(C, f));
        Wref(m + C, a, b) = om;
      }
    }
  for (int a = 0; a < m; ++a)
    for (int B = 0; B < m; ++B)
      for (int C = 0; C < m; ++C) {
        Jet d = partial(Nj(C, a), n + B);
        Wref(m + C, m + B, a) = -d;
        Wref(m + C, a, m + B) = std::move(d);
      }

  g_.assign(D * D, zero2);
  JetMatrix gh(geo_.gh), gv(geo_.gv);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      g_[a * D + b] = gh[a * m + b];
      g_[(m + a) * D + m + b] = gv[a * m + b];
    }
  JetMatrix ih = inverse(gh, m), iv = inverse(gv, m);
  ginv_.assign(D * D, zero2);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      ginv_[a * D + b] = ih[a * m + b];
      ginv_[(m + a) * D + m + b] = iv[a * m + b];
    }
}

Jet FrameData::e(int alpha, const Jet& f) const {
  const int Nc = n_ + m_;
  if (alpha >= m_) return partial(f, n_ + alpha - m_);
  Jet r = zero(f.order - 1);
  for (int mu = 0; mu < Nc; ++mu) {
    const std::size_t k = alpha * Nc + mu;
    if (Ezero_[k]) continue;
    fma_acc(r, E_[k], partial(f, mu));
  }
  return r;
}

}  // namespace ldalg
