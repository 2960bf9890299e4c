#include "ldalg/connection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ldalg {

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Canonical: return "canonical";
    case Provenance::Auxiliary: return "auxiliary";
    case Provenance::Displayed: return "displayed";
    case Provenance::Normal: return "normal";
    case Provenance::Symplectic: return "symplectic";
    case Provenance::SymplecticFamily: return "symplectic-family";
    case Provenance::LeviCivita: return "levi-civita-reconstructed";
    case Provenance::Custom: return "custom";
  }
  return "?";
}

namespace {

// dg[(gamma*D + alpha)*D + beta] = e_gamma g_alpha_beta, order 1.
std::vector<Jet> metric_gradients(const FrameData& fd) {
  const int D = fd.D();
  std::vector<Jet> dg(D * D * D, fd.zero(1));
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be) {
      const Jet& g = fd.g(al, be);
      if (g.is_zero()) continue;
      for (int ga = 0; ga < D; ++ga) dg[idx3(D, ga, al, be)] = fd.e(ga, g);
    }
  return dg;
}

// Christoffel-type block: 1/2 g^{ae}(e_f g_be + e_b g_fe - e_e g_bf), where
// the metric block and derivative directions start at offset `off`.
Jet christoffel(const FrameData& fd, const std::vector<Jet>& dg, int off, int a, int b, int f) {
  const int D = fd.D(), m = fd.m();
  Jet r = fd.zero(1);
  for (int e = 0; e < m; ++e) {
    const Jet& gi = fd.ginv(off + a, off + e);
    if (gi.is_zero()) continue;
    Jet low = dg[idx3(D, off + f, off + b, off + e)] + dg[idx3(D, off + b, off + f, off + e)] -
              dg[idx3(D, off + e, off + b, off + f)];
    fma_acc(r, gi, low);
  }
  return 0.5 * r;
}

enum class HForm { Plain, Printed };

Conn canonical_impl(const FrameData& fd, HForm form) {
  const int D = fd.D(), m = fd.m();
  const auto& geo = fd.geometry();
  std::vector<Jet> dg = metric_gradients(fd);
  Conn G(D * D * D, fd.zero(1));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int f = 0; f < m; ++f) {
        Jet L = christoffel(fd, dg, 0, a, b, f);
        if (form == HForm::Printed) {
          // + 1/2 g^{ae}(g_bd C^d_fe + g_fd C^d_eb - g_ed C^d_bf)
          auto C = [&](int d, int x, int y) -> const Jet& { return geo.C[(d * m + x) * m + y]; };
          Jet extra = fd.zero(1);
          for (int e = 0; e < m; ++e) {
            Jet low = fd.zero(1);
            for (int d = 0; d < m; ++d) {
              fma_acc(low, fd.g(b, d), C(d, f, e));
              fma_acc(low, fd.g(f, d), C(d, e, b));
              low -= fd.g(e, d) * C(d, b, f);
            }
            fma_acc(extra, fd.ginv(a, e), low);
          }
          axpy(L, 0.5, extra);
        }
        G[idx3(D, a, b, f)] = L;
      }
  // L^A_Bf = V_B N^A_f + 1/2 g^{AC}(delta_f g_BC - g_DC V_B N^D_f - g_DB V_C N^D_f)
  auto VN = [&](int B, int A, int f) -> const Jet& { return fd.W(m + A, f, m + B); };
  for (int A = 0; A < m; ++A)
    for (int B = 0; B < m; ++B)
      for (int f = 0; f < m; ++f) {
        Jet s = fd.zero(1);
        for (int C = 0; C < m; ++C) {
          const Jet& gi = fd.ginv(m + A, m + C);
          if (gi.is_zero()) continue;
          Jet t = dg[idx3(D, f, m + B, m + C)];
          for (int Dd = 0; Dd < m; ++Dd) {
            t -= fd.g(m + Dd, m + C) * VN(B, Dd, f);
            t -= fd.g(m + Dd, m + B) * VN(C, Dd, f);
          }
          fma_acc(s, gi, t);
        }
        Jet L = VN(B, A, f);
        axpy(L, 0.5, s);
        G[idx3(D, m + A, m + B, f)] = L;
      }
  // B^a_bC = 1/2 g^{ae} V_C g_be ;  B^A_BC = v-Christoffel symbols
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int C = 0; C < m; ++C) {
        Jet s = fd.zero(1);
        for (int e = 0; e < m; ++e) fma_acc(s, fd.ginv(a, e), dg[idx3(D, m + C, b, e)]);
        G[idx3(D, a, b, m + C)] = 0.5 * s;
        G[idx3(D, m + a, m + b, m + C)] = christoffel(fd, dg, m, a, b, C);
      }
  return G;
}

}  // namespace

DConnection canonical_dconnection() {
  return {Provenance::Canonical, [](const FrameData& fd) { return canonical_impl(fd, HForm::Plain); }};
}

DConnection auxiliary_dconnection() {
  return {Provenance::Auxiliary, [](const FrameData& fd) { return canonical_impl(fd, HForm::Plain); }};
}

DConnection displayed_dconnection() {
  return {Provenance::Displayed, [](const FrameData& fd) { return canonical_impl(fd, HForm::Printed); }};
}

DConnection normal_dconnection() {
  return {Provenance::Normal, [](const FrameData& fd) {
            const int D = fd.D(), m = fd.m();
            for (int a = 0; a < m; ++a)
              for (int b = 0; b < m; ++b) {
                const double x = fd.g(a, b).v, y = fd.g(m + a, m + b).v;
                if (std::fabs(x - y) > 1e-12 * std::max(1.0, std::fabs(x)))
                  throw SpecError("normal d-connection needs equal h- and v-blocks");
              }
            std::vector<Jet> dg = metric_gradients(fd);
            Conn G(D * D * D, fd.zero(1));
            for (int a = 0; a < m; ++a)
              for (int b = 0; b < m; ++b)
                for (int c = 0; c < m; ++c) {
                  Jet L = christoffel(fd, dg, 0, a, b, c);
                  Jet B = christoffel(fd, dg, m, a, b, c);
                  G[idx3(D, m + a, m + b, c)] = L;
                  G[idx3(D, a, b, c)] = std::move(L);
                  G[idx3(D, a, b, m + c)] = B;
                  G[idx3(D, m + a, m + b, m + c)] = std::move(B);
                }
            return G;
          }};
}

DConnection levi_civita() {
  return {Provenance::LeviCivita, [](const FrameData& fd) {
            const int D = fd.D();
            std::vector<Jet> dg = metric_gradients(fd);
            auto Wg = [&](int ph, int x, int y) -> const Jet& { return fd.W(ph, x, y); };
            // Lowered Koszul coefficients Gamma_{eps, beta gamma}.
            Conn low(D * D * D, fd.zero(1));
            for (int ep = 0; ep < D; ++ep)
              for (int be = 0; be < D; ++be)
                for (int ga = 0; ga < D; ++ga) {
                  Jet s = dg[idx3(D, ga, be, ep)] + dg[idx3(D, be, ga, ep)] - dg[idx3(D, ep, ga, be)];
                  for (int ph = 0; ph < D; ++ph) {
                    if (!fd.g(ph, ep).is_zero()) fma_acc(s, Wg(ph, ga, be), fd.g(ph, ep));
                    if (!fd.g(ph, be).is_zero()) s -= Wg(ph, ga, ep) * fd.g(ph, be);
                    if (!fd.g(ph, ga).is_zero()) s -= Wg(ph, be, ep) * fd.g(ph, ga);
                  }
                  low[idx3(D, ep, be, ga)] = 0.5 * s;
                }
            Conn G(D * D * D, fd.zero(1));
            for (int al = 0; al < D; ++al)
              for (int ep = 0; ep < D; ++ep) {
                const Jet& gi = fd.ginv(al, ep);
                if (gi.is_zero()) continue;
                for (int be = 0; be < D; ++be)
                  for (int ga = 0; ga < D; ++ga) fma_acc(G[idx3(D, al, be, ga)], gi, low[idx3(D, ep, be, ga)]);
              }
            return G;
          }};
}

DConnection custom_dconnection(ConnectionBlocks blocks, int m) {
  const std::size_t n3 = static_cast<std::size_t>(m) * m * m;
  for (auto* v : {&blocks.Lh, &blocks.Lv, &blocks.Bh, &blocks.Bv}) {
    if (v->empty()) v->assign(n3, Expr());
    if (v->size() != n3) throw DimensionError("connection block has the wrong size");
  }
  return {Provenance::Custom, [blocks, m](const FrameData& fd) {
            const int D = fd.D();
            if (fd.m() != m) throw DimensionError("connection blocks do not match m");
            Conn G(D * D * D, fd.zero(1));
            auto p = fd.point();
            for (int i = 0; i < m; ++i)
              for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                  const int s = (i * m + j) * m + k;
                  G[idx3(D, i, j, k)] = jet_eval(blocks.Lh[s], p);
                  G[idx3(D, m + i, m + j, k)] = jet_eval(blocks.Lv[s], p);
                  G[idx3(D, i, j, m + k)] = jet_eval(blocks.Bh[s], p);
                  G[idx3(D, m + i, m + j, m + k)] = jet_eval(blocks.Bv[s], p);
                }
            return G;
          }};
}

std::vector<double> block_values(const Conn& G, int m, std::string_view which) {
  const int D = 2 * m;
  int oa, ob, oc;
  if (which == "Lh") oa = 0, ob = 0, oc = 0;
  else if (which == "Lv") oa = m, ob = m, oc = 0;
  else if (which == "Bh") oa = 0, ob = 0, oc = m;
  else if (which == "Bv") oa = m, ob = m, oc = m;
  else throw std::invalid_argument("unknown connection block '" + std::string(which) + "'");
  std::vector<double> out(m * m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) out[(i * m + j) * m + k] = G[idx3(D, oa + i, ob + j, oc + k)].v;
  return out;
}

FormSource canonical_symplectic_form() {
  return [](const FrameData& fd) {
    const int D = fd.D(), m = fd.m();
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double x = fd.g(a, b).v, y = fd.g(m + a, m + b).v;
        if (std::fabs(x - y) > 1e-12 * std::max(1.0, std::fabs(x)))
          throw SpecError("g(J., .) is antisymmetric only for equal h- and v-blocks");
      }
    std::vector<Jet> th(D * D, fd.zero(2));
    // J e_a = -e_{m+a}, J e_{m+a} = e_a ; theta_{alpha beta} = g(J e_alpha, e_beta)
    for (int a = 0; a < m; ++a)
      for (int be = 0; be < D; ++be) {
        th[a * D + be] = -fd.g(m + a, be);
        th[(m + a) * D + be] = fd.g(a, be);
      }
    return th;
  };
}

FormSource expr_form(std::vector<Expr> theta) {
  return [theta](const FrameData& fd) {
    const int D = fd.D();
    if (static_cast<int>(theta.size()) != D * D) throw DimensionError("form has the wrong size");
    std::vector<Jet> th(D * D);
    for (int k = 0; k < D * D; ++k) th[k] = jet_eval(theta[k], fd.point());
    return th;
  };
}

namespace {

// (D_gamma theta)_{beta psi} as order-1 jets at [(gamma*D + beta)*D + psi].
std::vector<Jet> form_derivative_jets(const Conn& G, const std::vector<Jet>& th, const FrameData& fd) {
  const int D = fd.D();
  std::vector<Jet> out(D * D * D, fd.zero(1));
  for (int ga = 0; ga < D; ++ga)
    for (int be = 0; be < D; ++be)
      for (int ps = 0; ps < D; ++ps) {
        Jet s = th[be * D + ps].is_zero() ? fd.zero(1) : fd.e(ga, th[be * D + ps]);
        for (int ph = 0; ph < D; ++ph) {
          if (!th[ph * D + ps].is_zero()) s -= G[idx3(D, ph, be, ga)] * th[ph * D + ps];
          if (!th[be * D + ph].is_zero()) s -= G[idx3(D, ph, ps, ga)] * th[be * D + ph];
        }
        out[idx3(D, ga, be, ps)] = std::move(s);
      }
  return out;
}

}  // namespace

DConnection symplectic_dconnection(DConnection base, FormSource theta) {
  return {Provenance::Symplectic, [base, theta](const FrameData& fd) {
            const int D = fd.D();
            Conn G = base(fd);
            std::vector<Jet> th = theta(fd);
            JetMatrix M = inverse(th, D);  // M theta = I
            std::vector<Jet> Dth = form_derivative_jets(G, th, fd);
            Conn out = G;
            for (int ph = 0; ph < D; ++ph)
              for (int be = 0; be < D; ++be)
                for (int ga = 0; ga < D; ++ga) {
                  Jet s = fd.zero(1);
                  for (int ps = 0; ps < D; ++ps) fma_acc(s, Dth[idx3(D, ga, be, ps)], M[ps * D + ph]);
                  axpy(out[idx3(D, ph, be, ga)], 0.5, s);
                }
            return out;
          }};
}

DConnection symplectic_family(DConnection theta_conn, FormSource theta, std::vector<Expr> Y) {
  return {Provenance::SymplecticFamily, [theta_conn, theta, Y](const FrameData& fd) {
            const int D = fd.D();
            if (static_cast<int>(Y.size()) != D * D * D) throw DimensionError("Y has the wrong size");
            Conn G = theta_conn(fd);
            std::vector<Jet> th = theta(fd);
            JetMatrix M = inverse(th, D);
            std::vector<Jet> Yj(D * D * D);
            for (int k = 0; k < D * D * D; ++k) Yj[k] = jet_eval(Y[k], fd.point());
            // + 1/2 (Y^a_bc - theta_be M^{da} Y^e_dc)
            for (int al = 0; al < D; ++al)
              for (int be = 0; be < D; ++be)
                for (int ga = 0; ga < D; ++ga) {
                  Jet s = Yj[idx3(D, al, be, ga)];
                  for (int ep = 0; ep < D; ++ep) {
                    if (th[be * D + ep].is_zero()) continue;
                    for (int de = 0; de < D; ++de) s -= th[be * D + ep] * M[de * D + al] * Yj[idx3(D, ep, de, ga)];
                  }
                  axpy(G[idx3(D, al, be, ga)], 0.5, s);
                }
            return G;
          }};
}

std::vector<double> torsion(const Conn& G, const FrameData& fd) {
  const int D = fd.D();
  std::vector<double> T(D * D * D);
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be)
      for (int ga = 0; ga < D; ++ga)
        T[idx3(D, al, be, ga)] = G[idx3(D, al, be, ga)].v - G[idx3(D, al, ga, be)].v + fd.W(al, be, ga).v;
  return T;
}

std::vector<double> curvature(const Conn& G, const FrameData& fd) {
  const int D = fd.D();
  // dG[((delta*D + alpha)*D + beta)*D + gamma] = e_delta Gamma^alpha_beta_gamma
  std::vector<double> dG(D * D * D * D, 0.0);
  for (int k = 0; k < D * D * D; ++k) {
    if (G[k].is_zero()) continue;
    for (int de = 0; de < D; ++de) dG[de * D * D * D + k] = fd.e(de, G[k]).v;
  }
  std::vector<double> R(D * D * D * D, 0.0);
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be)
      for (int ga = 0; ga < D; ++ga)
        for (int de = 0; de < D; ++de) {
          if (ga == de) continue;
          double s = dG[de * D * D * D + idx3(D, al, be, ga)] - dG[ga * D * D * D + idx3(D, al, be, de)];
          for (int ph = 0; ph < D; ++ph) {
            s += G[idx3(D, ph, be, ga)].v * G[idx3(D, al, ph, de)].v;
            s -= G[idx3(D, ph, be, de)].v * G[idx3(D, al, ph, ga)].v;
            s += G[idx3(D, al, be, ph)].v * fd.W(ph, ga, de).v;
          }
          R[idx4(D, al, be, ga, de)] = s;
        }
  return R;
}

std::vector<double> ricci(const std::vector<double>& R, int D) {
  std::vector<double> ric(D * D, 0.0);
  for (int be = 0; be < D; ++be)
    for (int ga = 0; ga < D; ++ga)
      for (int al = 0; al < D; ++al) ric[be * D + ga] += R[idx4(D, al, be, ga, al)];
  return ric;
}

std::vector<double> ricci_blocks(const std::vector<double>& R, int m) {
  const int D = 2 * m;
  std::vector<double> ric(D * D, 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double hh = 0, hv = 0, vh = 0, vv = 0;
      for (int c = 0; c < m; ++c) {
        hh += R[idx4(D, c, a, b, c)];           // R_ab = R^c_abc
        hv -= R[idx4(D, c, a, c, m + b)];       // R_aA = -R^c_acA
        vh += R[idx4(D, m + c, m + a, b, m + c)];  // R_Aa = R^B_AaB
        vv += R[idx4(D, m + c, m + a, m + b, m + c)];  // R_AB = R^C_ABC
      }
      ric[a * D + b] = hh;
      ric[a * D + m + b] = hv;
      ric[(m + a) * D + b] = vh;
      ric[(m + a) * D + m + b] = vv;
    }
  return ric;
}

double scalar_curvature(const std::vector<double>& ric, const FrameData& fd) {
  const int D = fd.D();
  double s = 0.0;
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be) s += fd.ginv(al, be).v * ric[al * D + be];
  return s;
}

std::vector<double> einstein(const std::vector<double>& ric, double sR, const FrameData& fd) {
  const int D = fd.D();
  std::vector<double> E(D * D);
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be) E[al * D + be] = ric[al * D + be] - 0.5 * fd.g(al, be).v * sR;
  return E;
}

std::vector<double> metric_derivative(const Conn& G, const FrameData& fd) {
  const int D = fd.D();
  std::vector<Jet> g(D * D);
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be) g[al * D + be] = fd.g(al, be);
  return form_derivative(G, g, fd);
}

std::vector<double> form_derivative(const Conn& G, const std::vector<Jet>& theta, const FrameData& fd) {
  std::vector<Jet> j = form_derivative_jets(G, theta, fd);
  std::vector<double> out(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out[k] = j[k].v;
  return out;
}

double max_abs(const std::vector<double>& v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::fabs(x));
  return r;
}

CurvatureDisplayCheck curvature_display_check(const Conn& G, const FrameData& fd) {
  const int D = fd.D(), m = fd.m();
  const std::vector<double> R = curvature(G, fd);
  const std::vector<double> T = torsion(G, fd);
  auto g = [&](int a, int b, int c) { return G[idx3(D, a, b, c)].v; };
  auto eG = [&](int dir, int a, int b, int c) { return fd.e(dir, G[idx3(D, a, b, c)]).v; };
  auto L = [&](int a, int b, int f) { return g(a, b, f); };
  auto Lv = [&](int A, int B, int f) { return g(m + A, m + B, f); };
  auto Bh = [&](int a, int b, int C) { return g(a, b, m + C); };
  auto Bv = [&](int A, int B, int C) { return g(m + A, m + B, m + C); };
  auto Cs = [&](int d, int b, int f) { return fd.W(d, b, f).v; };
  auto Om = [&](int A, int f, int b) { return fd.W(m + A, f, b).v; };
  // T^B_bA read as T^{m+B}_{b, m+A}
  auto Tvhv = [&](int B, int b, int A) { return T[idx3(D, m + B, b, m + A)]; };
  CurvatureDisplayCheck out;
  out.as_printed.fill(0.0);
  out.corrected.fill(0.0);
  auto upd = [](double& slot, double v) { slot = std::max(slot, std::fabs(v)); };
  for (int a = 0; a < m; ++a)
    for (int e = 0; e < m; ++e)
      for (int b = 0; b < m; ++b)
        for (int f = 0; f < m; ++f) {
          // Block 1: R^a_ebf
          double common = 0.0;
          for (int d = 0; d < m; ++d) common += L(d, e, b) * L(a, d, f) - L(d, e, f) * L(a, d, b) + L(a, e, d) * Cs(d, b, f);
          for (int A = 0; A < m; ++A) common -= Bh(a, e, A) * Om(A, f, b);
          const double fixed = eG(f, a, e, b) - eG(b, a, e, f) + common;
          const double raw = eG(f, a, e, b) - eG(b, a, e, b) + common;
          const double gen1 = R[idx4(D, a, e, b, f)];
          upd(out.corrected[0], fixed - gen1);
          upd(out.as_printed[0], raw - gen1);
          // Block 2: R^A_Bbf with (A, B) = (a, e)
          double b2 = eG(f, m + a, m + e, b) - eG(b, m + a, m + e, f);
          for (int C = 0; C < m; ++C) b2 += Lv(C, e, b) * Lv(a, C, f) - Lv(C, e, f) * Lv(a, C, b);
          for (int d = 0; d < m; ++d) b2 += Lv(a, e, d) * Cs(d, b, f);
          for (int C = 0; C < m; ++C) b2 -= Bv(a, e, C) * Om(C, f, b);
          const double gen2 = R[idx4(D, m + a, m + e, b, f)];
          upd(out.corrected[1], b2 - gen2);
          upd(out.as_printed[1], b2 - gen2);
          // Block 3: R^a_ebA with A = f
          const int A = f;
          double Db = eG(b, a, e, m + A);
          for (int c = 0; c < m; ++c) Db += L(a, c, b) * Bh(c, e, A) - L(c, e, b) * Bh(a, c, A);
          for (int C = 0; C < m; ++C) Db -= Lv(C, A, b) * Bh(a, e, C);
          double b3 = eG(m + A, a, e, b) - Db;
          for (int B = 0; B < m; ++B) b3 += Bh(a, e, B) * Tvhv(B, b, A);
          const double gen3 = R[idx4(D, a, e, b, m + A)];
          upd(out.corrected[2], b3 - gen3);
          upd(out.as_printed[2], b3 - gen3);
          // Block 4: R^C_BfA with (C, B, f, A) = (a, e, b, f), gamma read as f
          const int Cc = a, Bb = e, ff = b, AA = f;
          double Df = eG(ff, m + Cc, m + Bb, m + AA);
          for (int E = 0; E < m; ++E)
            Df += Lv(Cc, E, ff) * Bv(E, Bb, AA) - Lv(E, Bb, ff) * Bv(Cc, E, AA) - Lv(E, AA, ff) * Bv(Cc, Bb, E);
          double b4 = eG(m + AA, m + Cc, m + Bb, ff) - Df;
          for (int Dd = 0; Dd < m; ++Dd) b4 += Bv(Cc, Bb, Dd) * Tvhv(Dd, ff, AA);
          const double gen4 = R[idx4(D, m + Cc, m + Bb, ff, m + AA)];
          upd(out.corrected[3], b4 - gen4);
          upd(out.as_printed[3], b4 - gen4);
          // Block 5: R^a_bBA with (b, B, A) = (e, b, f); the printed "B^a_bC" read with C = A
          const int b5 = e, B5 = b, A5 = f;
          double r5 = eG(m + A5, a, b5, m + B5) - eG(m + B5, a, b5, m + A5);
          for (int d = 0; d < m; ++d) r5 += Bh(d, b5, B5) * Bh(a, d, A5) - Bh(d, b5, A5) * Bh(a, d, B5);
          upd(out.corrected[4], r5 - R[idx4(D, a, b5, m + B5, m + A5)]);
          out.as_printed[4] = std::numeric_limits<double>::quiet_NaN();
          // Block 6: printed right side is R^A_{B C E}; the left label R^A_ECB differs.
          const int A6 = a, B6 = e, C6 = b, E6 = f;
          double r6 = eG(m + E6, m + A6, m + B6, m + C6) - eG(m + C6, m + A6, m + B6, m + E6);
          for (int F = 0; F < m; ++F) r6 += Bv(F, B6, C6) * Bv(A6, F, E6) - Bv(F, B6, E6) * Bv(A6, F, C6);
          upd(out.corrected[5], r6 - R[idx4(D, m + A6, m + B6, m + C6, m + E6)]);
          upd(out.as_printed[5], r6 - R[idx4(D, m + A6, m + E6, m + C6, m + B6)]);
        }
  return out;
}

Conn distortion(const Conn& K, const Conn& G) {
  Conn Z(K.size());
  for (std::size_t k = 0; k < K.size(); ++k) Z[k] = K[k] - G[k];
  return Z;
}

std::vector<double> displayed_distortion(const Conn& G, const FrameData& fd) {
  const int D = fd.D(), m = fd.m();
  const std::vector<double> T = torsion(G, fd);
  auto gh = [&](int a, int b) { return fd.g(a, b).v; };
  auto gv = [&](int A, int B) { return fd.g(m + A, m + B).v; };
  auto ihh = [&](int a, int b) { return fd.ginv(a, b).v; };
  auto ivv = [&](int A, int B) { return fd.ginv(m + A, m + B).v; };
  auto Bh = [&](int a, int b, int C) { return G[idx3(D, a, b, m + C)].v; };
  auto Om = [&](int A, int b, int f) { return fd.W(m + A, b, f).v; };
  auto Tv = [&](int C, int b, int Dd) { return T[idx3(D, m + C, b, m + Dd)]; };
  auto kd = [](int x, int y) { return x == y ? 1.0 : 0.0; };
  auto Xi = [&](int a, int d, int b, int f) { return 0.5 * (kd(a, b) * kd(d, f) - gh(b, f) * ihh(a, d)); };
  auto Xpm = [&](double s, int A, int Dd, int C, int B) { return 0.5 * (kd(A, C) * kd(Dd, B) + s * gv(C, B) * ivv(A, Dd)); };
  std::vector<double> Z(D * D * D, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        // Z^A_bf with (A, b, f) = (i, j, k)
        double zA_bf = -0.5 * Om(i, j, k);
        for (int a = 0; a < m; ++a)
          for (int B = 0; B < m; ++B) zA_bf -= Bh(a, j, B) * gh(a, k) * ivv(i, B);
        Z[idx3(D, m + i, j, k)] = zA_bf;
        // Z^a_Bf and Z^a_fB with (a, B, f) = (i, j, k)
        double om_part = 0.0, xi_part = 0.0;
        for (int b = 0; b < m; ++b) {
          for (int C = 0; C < m; ++C) om_part += 0.5 * Om(C, b, k) * gv(C, j) * ihh(b, i);
          for (int d = 0; d < m; ++d) xi_part += Xi(i, d, b, k) * Bh(b, d, j);
        }
        Z[idx3(D, i, m + j, k)] = om_part - xi_part;
        Z[idx3(D, i, k, m + j)] = om_part + xi_part;
        // Z^A_Bf with (A, B, f) = (i, j, k);  Z^A_bB with (A, b, B) = (i, k, j)
        double zA_Bf = 0.0, zA_bB = 0.0;
        for (int C = 0; C < m; ++C)
          for (int Dd = 0; Dd < m; ++Dd) {
            zA_Bf += Xpm(+1, i, Dd, C, j) * Tv(C, k, Dd);
            zA_bB -= Xpm(-1, i, Dd, C, j) * Tv(C, k, Dd);
          }
        Z[idx3(D, m + i, m + j, k)] = zA_Bf;
        Z[idx3(D, m + i, k, m + j)] = zA_bB;
        // Z^a_AB with (a, A, B) = (i, j, k)
        double zaAB = 0.0;
        for (int b = 0; b < m; ++b)
          for (int C = 0; C < m; ++C) zaAB -= 0.5 * ihh(i, b) * (Tv(C, b, j) * gv(C, k) + Tv(C, b, k) * gv(C, j));
        Z[idx3(D, i, m + j, m + k)] = zaAB;
      }
  return Z;
}

std::array<double, 8> distortion_display_check(const Conn& G, const FrameData& fd) {
  const int D = fd.D(), m = fd.m();
  const Conn Z = distortion(levi_civita()(fd), G);
  const std::vector<double> Zd = displayed_distortion(G, fd);
  std::array<double, 8> out{};
  for (int al = 0; al < D; ++al)
    for (int be = 0; be < D; ++be)
      for (int ga = 0; ga < D; ++ga) {
        const int blk = 4 * (al >= m) + 2 * (be >= m) + (ga >= m);
        const int k = idx3(D, al, be, ga);
        out[blk] = std::max(out[blk], std::fabs(Zd[k] - Z[k].v));
      }
  return out;
}

std::vector<double> distorted_ricci(const Conn& G, const Conn& Z, const FrameData& fd) {
  const int D = fd.D();
  std::vector<double> eZ(D * D * D * D, 0.0);  // [delta][alpha beta gamma]
  for (int k = 0; k < D * D * D; ++k) {
    if (Z[k].is_zero()) continue;
    for (int de = 0; de < D; ++de) eZ[de * D * D * D + k] = fd.e(de, Z[k]).v;
  }
  auto g = [&](int a, int b, int c) { return G[idx3(D, a, b, c)].v; };
  auto z = [&](int a, int b, int c) { return Z[idx3(D, a, b, c)].v; };
  std::vector<double> ric(D * D, 0.0);
  for (int be = 0; be < D; ++be)
    for (int ga = 0; ga < D; ++ga) {
      double s = 0.0;
      for (int al = 0; al < D; ++al) {
        const int de = al;
        double t = eZ[de * D * D * D + idx3(D, al, be, ga)] - eZ[ga * D * D * D + idx3(D, al, be, de)];
        for (int ph = 0; ph < D; ++ph) {
          t += g(ph, be, ga) * z(al, ph, de) + z(ph, be, ga) * g(al, ph, de) + z(ph, be, ga) * z(al, ph, de);
          t -= g(ph, be, de) * z(al, ph, ga) + z(ph, be, de) * g(al, ph, ga) + z(ph, be, de) * z(al, ph, ga);
          t += z(al, be, ph) * fd.W(ph, ga, de).v;
        }
        s += t;
      }
      ric[be * D + ga] = s;
    }
  return ric;
}

std::vector<double> second_covariant(const Conn& G, const Jet& f, const FrameData& fd) {
  const int D = fd.D();
  std::vector<Jet> df(D);
  for (int al = 0; al < D; ++al) df[al] = fd.e(al, f);
  std::vector<double> H(D * D);
  for (int be = 0; be < D; ++be)
    for (int ga = 0; ga < D; ++ga) {
      double s = fd.e(be, df[ga]).v;
      for (int ph = 0; ph < D; ++ph) s -= G[idx3(D, ph, ga, be)].v * df[ph].v;
      H[be * D + ga] = s;
    }
  return H;
}

double laplacian(const Conn& G, const Jet& f, const FrameData& fd) {
  const int D = fd.D();
  std::vector<double> H = second_covariant(G, f, fd);
  double s = 0.0;
  for (int be = 0; be < D; ++be)
    for (int ga = 0; ga < D; ++ga) s += fd.ginv(be, ga).v * H[be * D + ga];
  return s;
}

}  // namespace ldalg
