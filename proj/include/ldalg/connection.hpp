#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "ldalg/frame.hpp"

namespace ldalg {

// Frame coefficients Gamma^alpha_beta_gamma at [(alpha*D + beta)*D + gamma],
// with D_{e_gamma} e_beta = Gamma^alpha_beta_gamma e_alpha. Order >= 1.
using Conn = std::vector<Jet>;

enum class Provenance {
  Canonical,
  Auxiliary,
  Displayed,
  Normal,
  Symplectic,
  SymplecticFamily,
  LeviCivita,
  Custom,
};
std::string_view provenance_name(Provenance p);

// A d-connection is a pointwise formula on frame data.
struct DConnection {
  Provenance provenance = Provenance::Custom;
  std::function<Conn(const FrameData&)> at;
  Conn operator()(const FrameData& fd) const { return at(fd); }
};

// Metric-compatible with T^a_bf = C^a_bf and T^A_BC = 0: h-coefficients are
// the delta-Christoffel symbols of g_ab.
DConnection canonical_dconnection();
// Same h-h block formula as canonical; kept as a separately tagged object.
DConnection auxiliary_dconnection();
// Canonical plus the C-dependent h-h terms exactly as printed; not metric
// compatible when C != 0, kept for comparison.
DConnection displayed_dconnection();
// Built from an equal-block d-metric: L^a_bf from delta-derivatives of the
// h-block, B^A_BC from V-derivatives of the v-block, mirrored across blocks.
DConnection normal_dconnection();
// Torsion-free metric connection of the full frame metric (Koszul formula
// in the anholonomic frame).
DConnection levi_civita();

// Four Expr families, each [i*m*m + j*m + k]:
// Lh[a][b][f] = L^a_bf, Lv[A][B][f] = L^A_Bf, Bh[a][b][C] = B^a_bC, Bv[A][B][C] = B^A_BC.
struct ConnectionBlocks {
  std::vector<Expr> Lh, Lv, Bh, Bv;
};
DConnection custom_dconnection(ConnectionBlocks blocks, int m);
// Reads the four families back out of a coefficient array (values only).
std::vector<double> block_values(const Conn& G, int m, std::string_view which);

// 2-form frame components theta_alpha_beta as order-2 jets.
using FormSource = std::function<std::vector<Jet>(const FrameData&)>;
// theta(x, y) = g(Jx, y) for the frame almost complex structure; needs equal
// h- and v-blocks (J is g-orthogonal only then), SpecError otherwise.
FormSource canonical_symplectic_form();
// theta from Expr frame components (2m x 2m, row major, antisymmetric).
FormSource expr_form(std::vector<Expr> theta);

// Gamma + (1/2) theta^-1 (D theta): theta-compatible, still a d-connection
// for forms that are block-diagonal or purely h-v mixed.
DConnection symplectic_dconnection(DConnection base, FormSource theta);
// Adds Theta-projected Y (frame components [(alpha*D+beta)*D+gamma]); Y must
// be a d-tensor for the result to stay a d-connection.
DConnection symplectic_family(DConnection theta_conn, FormSource theta, std::vector<Expr> Y);

// ---- tensors at a point (values) ----

// T^alpha_beta_gamma = Gamma^alpha_beta_gamma - Gamma^alpha_gamma_beta + W^alpha_beta_gamma
std::vector<double> torsion(const Conn& G, const FrameData& fd);
// R^alpha_beta_gamma_delta = [R(e_delta, e_gamma) e_beta]^alpha at [((a*D+b)*D+c)*D+d]
std::vector<double> curvature(const Conn& G, const FrameData& fd);
// R_beta_gamma = R^alpha_beta_gamma_alpha
std::vector<double> ricci(const std::vector<double>& R, int D);
// The four printed contractions R_ab = R^c_abc, R_aA = -R^c_acA, R_Aa = R^B_AaB,
// R_AB = R^C_ABC, assembled into a D x D array by an independent loop.
std::vector<double> ricci_blocks(const std::vector<double>& R, int m);
double scalar_curvature(const std::vector<double>& ric, const FrameData& fd);
std::vector<double> einstein(const std::vector<double>& ric, double sR, const FrameData& fd);
// (D_gamma g)_alpha_beta at [(gamma*D + alpha)*D + beta]
std::vector<double> metric_derivative(const Conn& G, const FrameData& fd);
double max_abs(const std::vector<double>& v);
// (D_gamma theta)_alpha_beta
std::vector<double> form_derivative(const Conn& G, const std::vector<Jet>& theta, const FrameData& fd);

// Differences between the printed curvature block formulas and the generic
// formula. Readings: "as printed" keeps every index letter, "corrected"
// repairs the letters that leave a free index unmatched.
struct CurvatureDisplayCheck {
  // Per block: max |printed - generic|; NaN where the printed reading has an
  // unmatched free index and cannot be evaluated.
  std::array<double, 6> as_printed{};
  std::array<double, 6> corrected{};
};
CurvatureDisplayCheck curvature_display_check(const Conn& G, const FrameData& fd);

// Zhat = K - Gamma (order 1) where K is the Levi-Civita connection.
Conn distortion(const Conn& K, const Conn& G);
// Printed distortion blocks under the A = m + a identification, assembled
// into frame components; entries without a printed formula are zero.
std::vector<double> displayed_distortion(const Conn& G, const FrameData& fd);
// Max |printed - reconstructed| per block of Zhat, indexed by
// 4*[alpha is v] + 2*[beta is v] + [gamma is v]; the reconstruction is the
// Levi-Civita connection minus Gamma.
std::array<double, 8> distortion_display_check(const Conn& G, const FrameData& fd);
// Ricci of Gamma + Z minus Ricci of Gamma, expanded in Z (D x D values).
std::vector<double> distorted_ricci(const Conn& G, const Conn& Z, const FrameData& fd);
// (D_beta D_gamma f) = e_beta(e_gamma f) - Gamma^phi_gamma_beta e_phi f, f of order 2.
std::vector<double> second_covariant(const Conn& G, const Jet& f, const FrameData& fd);
// g^{beta gamma} (D_beta D_gamma f)
double laplacian(const Conn& G, const Jet& f, const FrameData& fd);

inline int idx3(int D, int a, int b, int c) { return (a * D + b) * D + c; }
inline int idx4(int D, int a, int b, int c, int d) { return ((a * D + b) * D + c) * D + d; }

}  // namespace ldalg
