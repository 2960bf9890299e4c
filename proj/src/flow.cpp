#include "ldalg/flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ldalg {

void GridSpec::validate() const {
  if (box.empty() || box.size() != resolution.size()) throw SpecError("grid box and resolution sizes differ");
  double total_d = 1.0;
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (!(box[k].first < box[k].second))
      throw SpecError("grid axis " + std::to_string(k + 1) + " needs lo < hi");
    if (resolution[k] < 2) throw SpecError("grid axis " + std::to_string(k + 1) + " needs at least 2 nodes");
    total_d *= resolution[k];
  }
  if (total_d > static_cast<double>(cap))
    throw SpecError("grid has " + std::to_string(static_cast<long long>(total_d)) + " nodes, cap is " +
                    std::to_string(cap));
}

std::size_t GridSpec::total() const {
  std::size_t t = 1;
  for (int r : resolution) t *= static_cast<std::size_t>(r);
  return t;
}

double GridSpec::spacing(int axis) const {
  const double len = box[axis].second - box[axis].first;
  return rule == Quadrature::Midpoint ? len / resolution[axis] : len / (resolution[axis] - 1);
}

double GridSpec::coord(int axis, int k) const {
  const double h = spacing(axis);
  return box[axis].first + (rule == Quadrature::Midpoint ? (k + 0.5) * h : k * h);
}

double GridSpec::weight(int axis, int k) const {
  const double h = spacing(axis);
  if (rule == Quadrature::Trapezoid && (k == 0 || k == resolution[axis] - 1)) return 0.5 * h;
  return h;
}

std::vector<int> GridSpec::multi_index(std::size_t node) const {
  std::vector<int> idx(box.size());
  for (int k = dim() - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(node % resolution[k]);
    node /= resolution[k];
  }
  return idx;
}

std::size_t GridSpec::flat_index(const std::vector<int>& idx) const {
  std::size_t node = 0;
  for (int k = 0; k < dim(); ++k) node = node * resolution[k] + idx[k];
  return node;
}

std::vector<double> GridSpec::point(std::size_t node) const {
  const auto idx = multi_index(node);
  std::vector<double> p(box.size());
  for (int k = 0; k < dim(); ++k) p[k] = coord(k, idx[k]);
  return p;
}

double GridSpec::cell_weight(std::size_t node) const {
  const auto idx = multi_index(node);
  double w = 1.0;
  for (int k = 0; k < dim(); ++k) w *= weight(k, idx[k]);
  return w;
}

std::string_view flow_mode_name(FlowMode m) {
  switch (m) {
    case FlowMode::Cartan: return "cartan";
    case FlowMode::Canonical: return "canonical";
    case FlowMode::Symplectic: return "symplectic";
  }
  return "unknown";
}

namespace {

std::string where(const std::vector<double>& p) {
  std::string s = "(";
  for (std::size_t k = 0; k < p.size(); ++k) s += (k ? ", " : "") + std::to_string(p[k]);
  return s + ")";
}

Eigen::MatrixXd block(const std::vector<double>& field, std::size_t node, int m) {
  Eigen::MatrixXd b(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) b(i, j) = field[node * m * m + i * m + j];
  return b;
}

bool equal_blocks(const std::vector<double>& gh, const std::vector<double>& gv) {
  for (std::size_t k = 0; k < gh.size(); ++k)
    if (std::fabs(gh[k] - gv[k]) > 1e-12 * std::max(1.0, std::fabs(gh[k]))) return false;
  return true;
}

// theta = g(J., .) per node, from the h-block of an equal-block state.
std::vector<double> theta_from_metric(const std::vector<double>& gh, std::size_t nodes, int m) {
  const int D = 2 * m;
  std::vector<double> th(nodes * D * D, 0.0);
  for (std::size_t p = 0; p < nodes; ++p)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double g = gh[p * m * m + a * m + b];
        th[p * D * D + a * D + m + b] = -g;
        th[p * D * D + (m + a) * D + b] = g;
      }
  return th;
}

// Derivative weights of the degree-2 Lagrange fit on one axis at node i.
struct AxisStencil {
  int first = 0, count = 0;
  double d1[3] = {0, 0, 0};
  double d2[3] = {0, 0, 0};
};

AxisStencil axis_stencil(int res, int i, double h) {
  AxisStencil s;
  if (res == 2) {
    s.first = 0;
    s.count = 2;
    s.d1[0] = -1.0 / h;
    s.d1[1] = 1.0 / h;
    return s;
  }
  s.count = 3;
  s.first = std::clamp(i - 1, 0, res - 3);
  const int r = i - s.first;  // 0, 1 or 2: node position inside the stencil
  const double c1[3][3] = {{-3, 4, -1}, {-1, 0, 1}, {1, -4, 3}};
  for (int k = 0; k < 3; ++k) {
    s.d1[k] = c1[r][k] / (2 * h);
    s.d2[k] = (k == 1 ? -2.0 : 1.0) / (h * h);
  }
  return s;
}

// Linear functionals giving gradient and Hessian at one node.
struct NodeStencil {
  int dim = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> grad, hess;  // hess[k*dim+l]
};

NodeStencil node_stencil(const GridSpec& grid, std::size_t node) {
  const int d = grid.dim();
  const auto idx = grid.multi_index(node);
  std::vector<AxisStencil> ax(d);
  for (int k = 0; k < d; ++k) ax[k] = axis_stencil(grid.resolution[k], idx[k], grid.spacing(k));
  NodeStencil st;
  st.dim = d;
  st.grad.resize(d);
  st.hess.resize(d * d);
  auto shifted = [&](int k, int pk, int l = -1, int pl = 0) {
    auto j = idx;
    j[k] = ax[k].first + pk;
    if (l >= 0) j[l] = ax[l].first + pl;
    return grid.flat_index(j);
  };
  for (int k = 0; k < d; ++k) {
    for (int p = 0; p < ax[k].count; ++p) {
      st.grad[k].push_back({shifted(k, p), ax[k].d1[p]});
      if (ax[k].d2[p] != 0.0) st.hess[k * d + k].push_back({shifted(k, p), ax[k].d2[p]});
    }
    for (int l = k + 1; l < d; ++l) {
      for (int p = 0; p < ax[k].count; ++p)
        for (int q = 0; q < ax[l].count; ++q) st.hess[k * d + l].push_back({shifted(k, p, l, q), ax[k].d1[p] * ax[l].d1[q]});
      st.hess[l * d + k] = st.hess[k * d + l];
    }
  }
  return st;
}

Jet fit(const NodeStencil& st, const std::vector<double>& field, int stride, int comp, std::size_t node) {
  const int d = st.dim;
  auto at = [&](std::size_t q) { return field[q * stride + comp]; };
  Jet j = Jet::constant(d, at(node), 2);
  for (int k = 0; k < d; ++k) {
    double s = 0.0;
    for (const auto& [q, w] : st.grad[k]) s += w * at(q);
    j.d[k] = s;
    for (int l = 0; l < d; ++l) {
      double t = 0.0;
      for (const auto& [q, w] : st.hess[k * d + l]) t += w * at(q);
      j.hess(k, l) = t;
    }
  }
  return j;
}

GeometryJets jets_with(const FlowState& s, const NodeStencil& st, std::size_t node) {
  const int n = s.n, m = s.m;
  GeometryJets j;
  j.n = n;
  j.m = m;
  j.point = s.grid.point(node);
  j.rho.resize(n * m);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) j.rho[i * m + a] = jet_eval(s.alg.rho(i, a), j.point);
  j.C.resize(m * m * m);
  for (int f = 0; f < m; ++f)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) j.C[(f * m + a) * m + b] = jet_eval(s.alg.C(f, a, b), j.point);
  j.N.resize(m * m);
  j.gh.resize(m * m);
  j.gv.resize(m * m);
  for (int k = 0; k < m * m; ++k) {
    j.N[k] = fit(st, s.N, m * m, k, node);
    j.gh[k] = fit(st, s.gh, m * m, k, node);
    j.gv[k] = fit(st, s.gv, m * m, k, node);
  }
  return j;
}

// Tensors of one connection at one node.
struct NodeEval {
  FrameData fd;
  Conn G;
  std::vector<double> ric;    // Ricci of G
  std::vector<double> drive;  // Ricci driving the metric: ric, plus Zic in cartan mode
  double sR = 0.0;
  Jet f;
};

NodeEval evaluate(const FlowState& s, std::size_t node, ConnMode conn, bool with_distortion) {
  const NodeStencil st = node_stencil(s.grid, node);
  FrameData fd(jets_with(s, st, node));
  DConnection dc = conn == ConnMode::Cartan ? normal_dconnection() : canonical_dconnection();
  Conn G = dc(fd);
  std::vector<double> ric = ricci(curvature(G, fd), fd.D());
  std::vector<double> drive = ric;
  if (with_distortion) {
    const Conn Z = distortion(levi_civita()(fd), G);
    const std::vector<double> zic = distorted_ricci(G, Z, fd);
    for (std::size_t k = 0; k < drive.size(); ++k) drive[k] += zic[k];
  }
  const double sR = scalar_curvature(ric, fd);
  Jet f = fit(st, s.f, 1, 0, node);
  return {std::move(fd), std::move(G), std::move(ric), std::move(drive), sR, std::move(f)};
}

ConnMode conn_for(FlowMode mode) { return mode == FlowMode::Canonical ? ConnMode::Canonical : ConnMode::Cartan; }

double min_block_eigen(const FlowState& s, std::size_t node) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto* field : {&s.gh, &s.gv}) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block(*field, node, s.m));
    lo = std::min(lo, es.eigenvalues().cwiseAbs().minCoeff());
  }
  return lo;
}

double max_abs_ricci(const std::vector<double>& ric) {
  double r = 0.0;
  for (double x : ric) r = std::max(r, std::fabs(x));
  return r;
}

// |D f|^2 split into h and v parts.
std::pair<double, double> gradient_norms(const NodeEval& ev) {
  const int m = ev.fd.m(), D = ev.fd.D();
  std::vector<double> df(D);
  for (int al = 0; al < D; ++al) df[al] = ev.fd.e(al, ev.f).v;
  double h = 0.0, v = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      h += ev.fd.ginv(a, b).v * df[a] * df[b];
      v += ev.fd.ginv(m + a, m + b).v * df[m + a] * df[m + b];
    }
  return {h, v};
}

double volume_density(const FlowState& s, std::size_t node) {
  return std::sqrt(std::fabs(block(s.gh, node, s.m).determinant() * block(s.gv, node, s.m).determinant()));
}

struct StepTry {
  FlowState next;
  bool ok = true;
  std::size_t bad_node = 0;
};

StepTry try_step(const FlowState& s, const std::vector<NodeEval>& evs, double dchi, FlowMode mode, bool evolve_f) {
  const int m = s.m, D = 2 * m, mm = m * m;
  StepTry t{s};
  FlowState& x = t.next;
  x.chi = s.chi + dchi;
  x.dchi_used = dchi;
  double constraint = 0.0;
  for (std::size_t p = 0; p < s.nodes(); ++p) {
    const NodeEval& ev = evs[p];
    auto R = [&](int a, int b) { return ev.drive[a * D + b]; };
    for (int a = 0; a < m; ++a)
      for (int A = 0; A < m; ++A) constraint = std::max({constraint, std::fabs(R(a, m + A)), std::fabs(R(m + A, a))});
    switch (mode) {
      case FlowMode::Canonical:
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            x.gh[p * mm + a * m + b] -= dchi * (R(a, b) + R(b, a));
            x.gv[p * mm + a * m + b] -= dchi * (R(m + a, m + b) + R(m + b, m + a));
          }
        break;
      case FlowMode::Cartan:
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            x.gh[p * mm + a * m + b] -= 0.5 * dchi * (R(a, b) + R(b, a));
            x.gv[p * mm + a * m + b] = x.gh[p * mm + a * m + b];
          }
        break;
      case FlowMode::Symplectic:
        for (int al = 0; al < D; ++al)
          for (int be = 0; be < D; ++be) x.theta[p * D * D + al * D + be] -= 0.5 * dchi * (R(al, be) - R(be, al));
        break;
    }
    if (!evolve_f) continue;
    const auto [h2, v2] = gradient_norms(ev);
    x.f[p] += dchi * (-laplacian(ev.G, ev.f, ev.fd) + h2 + v2 - ev.sR);
    if (!std::isfinite(x.f[p])) throw NumericError("non-finite f at " + where(s.grid.point(p)));
  }
  x.constraint_residual = constraint;
  x.min_det = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < s.nodes() && t.ok; ++p)
    for (int which = 0; which < 2; ++which) {
      const auto& nf = which ? x.gv : x.gh;
      const auto& of = which ? s.gv : s.gh;
      for (int k = 0; k < mm; ++k)
        if (!std::isfinite(nf[p * mm + k])) throw NumericError("non-finite metric at " + where(s.grid.point(p)));
      const double dn = block(nf, p, m).determinant(), d0 = block(of, p, m).determinant();
      x.min_det = std::min(x.min_det, std::fabs(dn));
      if (std::fabs(dn) < 1e-12 || (dn > 0) != (d0 > 0)) {
        t.ok = false;
        t.bad_node = p;
        break;
      }
    }
  if (mode != FlowMode::Symplectic)
    x.theta = equal_blocks(x.gh, x.gv) ? theta_from_metric(x.gh, x.nodes(), m) : std::vector<double>{};
  return t;
}

double bound_from(const FlowState& s, const std::vector<NodeEval>& evs) {
  double lam = std::numeric_limits<double>::infinity(), ric = 0.0;
  for (std::size_t p = 0; p < s.nodes(); ++p) {
    lam = std::min(lam, min_block_eigen(s, p));
    ric = std::max(ric, max_abs_ricci(evs[p].drive));
  }
  return ric == 0.0 ? std::numeric_limits<double>::infinity() : 0.1 * lam / ric;
}

std::vector<NodeEval> evaluate_all(const FlowState& s, FlowMode mode) {
  std::vector<NodeEval> evs;
  evs.reserve(s.nodes());
  for (std::size_t p = 0; p < s.nodes(); ++p) evs.push_back(evaluate(s, p, conn_for(mode), mode == FlowMode::Cartan));
  return evs;
}

std::vector<NodeEval> evaluate_all(const FlowState& s, ConnMode conn, bool with_distortion) {
  std::vector<NodeEval> evs;
  evs.reserve(s.nodes());
  for (std::size_t p = 0; p < s.nodes(); ++p) evs.push_back(evaluate(s, p, conn, with_distortion));
  return evs;
}

// Additive shift c with int (4 pi tau)^-m e^-(f+c) dv = 1.
double normalizing_shift(const FlowState& s, double tau) {
  const double pref = std::pow(4 * std::numbers::pi * tau, -s.m);
  double I = 0.0;
  for (std::size_t p = 0; p < s.nodes(); ++p) I += pref * std::exp(-s.f[p]) * volume_density(s, p) * s.grid.cell_weight(p);
  if (!(I > 0) || !std::isfinite(I)) throw NumericError("measure does not normalize");
  return std::log(I);
}

}  // namespace

FlowState sample_state(const LieAlgebroid& alg, const DMetric& g, const NConnection& N, const Expr& f,
                       const GridSpec& grid) {
  grid.validate();
  const int n = alg.n(), m = alg.m();
  if (grid.dim() != n + m) throw DimensionError("grid dimension is not n + m");
  if (g.m() != m || N.m != m) throw DimensionError("metric or N-connection disagrees on m");
  FlowState s;
  s.alg = alg;
  s.grid = grid;
  s.n = n;
  s.m = m;
  const std::size_t T = grid.total();
  s.gh.resize(T * m * m);
  s.gv.resize(T * m * m);
  s.N.resize(T * m * m);
  s.f.resize(T);
  s.min_det = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < T; ++p) {
    const auto x = grid.point(p);
    try {
      for (int k = 0; k < m * m; ++k) {
        s.gh[p * m * m + k] = eval(g.h_block()[k], x);
        s.gv[p * m * m + k] = eval(g.v_block()[k], x);
        s.N[p * m * m + k] = eval(N.coeffs[k], x);
      }
      s.f[p] = eval(f, x);
    } catch (const NumericError& e) {
      throw DomainError(std::string(e.what()) + " at grid point " + where(x));
    }
    if (!std::isfinite(s.f[p])) throw DomainError("f is not finite at grid point " + where(x));
    const double d = std::min(std::fabs(block(s.gh, p, m).determinant()), std::fabs(block(s.gv, p, m).determinant()));
    if (!(d >= 1e-12)) throw DegeneracyError("degenerate d-metric block at grid point " + where(x));
    s.min_det = std::min(s.min_det, d);
  }
  if (equal_blocks(s.gh, s.gv)) s.theta = theta_from_metric(s.gh, T, m);
  return s;
}

GeometryJets node_jets(const FlowState& s, std::size_t node) { return jets_with(s, node_stencil(s.grid, node), node); }

Jet node_f_jet(const FlowState& s, std::size_t node) { return fit(node_stencil(s.grid, node), s.f, 1, 0, node); }

Jet grid_jet(const GridSpec& grid, const std::vector<double>& values, std::size_t node) {
  if (values.size() != grid.total()) throw DimensionError("grid field size differs from node count");
  return fit(node_stencil(grid, node), values, 1, 0, node);
}

double stability_bound(const FlowState& s, FlowMode mode) { return bound_from(s, evaluate_all(s, mode)); }

FlowState flow_step(const FlowState& s, double dchi, FlowMode mode, bool evolve_f) {
  if (!(dchi > 0)) throw SpecError("flow step needs dchi > 0");
  if (mode == FlowMode::Symplectic && !s.has_theta()) throw SpecError("symplectic flow needs an equal-block state");
  const auto evs = evaluate_all(s, mode);
  const double bound = bound_from(s, evs);
  if (dchi > bound) throw SpecError("dchi = " + std::to_string(dchi) + " exceeds the stability bound " + std::to_string(bound));
  StepTry t = try_step(s, evs, dchi, mode, evolve_f);
  if (!t.ok) t = try_step(s, evs, 0.5 * dchi, mode, evolve_f);
  if (!t.ok) throw DegeneracyError("flow step loses nondegeneracy at " + where(s.grid.point(t.bad_node)));
  return t.next;
}

FunctionalReport perelman_F(const FlowState& s, ConnMode conn) {
  const auto evs = evaluate_all(s, conn, false);
  FunctionalReport r;
  for (std::size_t p = 0; p < s.nodes(); ++p) {
    const auto [h2, v2] = gradient_norms(evs[p]);
    const double w = std::exp(-s.f[p]) * volume_density(s, p) * s.grid.cell_weight(p);
    r.curvature_part += evs[p].sR * w;
    r.gradient_part += (h2 + v2) * w;
    r.normalization += w;
  }
  r.value = r.curvature_part + r.gradient_part;
  return r;
}

FunctionalReport perelman_W(const FlowState& s, double tau, FunctionalOptions opt) {
  if (!(tau > 0)) throw SpecError("W needs tau > 0");
  const auto evs = evaluate_all(s, opt.conn, false);
  FunctionalReport r;
  r.shift = normalizing_shift(s, tau);
  const double pref = std::pow(4 * std::numbers::pi * tau, -s.m);
  double rest = 0.0;
  for (std::size_t p = 0; p < s.nodes(); ++p) {
    const auto [h2, v2] = gradient_norms(evs[p]);
    const double fs = s.f[p] + r.shift;
    const double mu = pref * std::exp(-fs) * volume_density(s, p) * s.grid.cell_weight(p);
    const double sR = evs[p].sR;
    double full, curv;
    if (opt.squared_gradient) {
      full = tau * (sR + h2 + v2);
      curv = tau * sR;
    } else {
      const double b = sR + std::sqrt(h2) + std::sqrt(v2);
      full = tau * b * b;
      curv = tau * sR * sR;
    }
    r.curvature_part += curv * mu;
    r.gradient_part += (full - curv) * mu;
    rest += (fs - 2.0 * s.m) * mu;
    r.normalization += mu;
  }
  r.value = r.curvature_part + r.gradient_part + rest;
  return r;
}

Thermodynamics thermodynamics(const FlowState& s, double tau, ConnMode conn) {
  if (!(tau > 0)) throw SpecError("thermodynamics needs tau > 0");
  const bool cartan = conn == ConnMode::Cartan;
  const auto evs = evaluate_all(s, conn, cartan);
  const double shift = normalizing_shift(s, tau);
  const double pref = std::pow(4 * std::numbers::pi * tau, -s.m);
  const int m = s.m, D = 2 * m;
  Thermodynamics th;
  for (std::size_t p = 0; p < s.nodes(); ++p) {
    const NodeEval& ev = evs[p];
    const auto [h2, v2] = gradient_norms(ev);
    const double fs = s.f[p] + shift;
    const double mu = pref * std::exp(-fs) * volume_density(s, p) * s.grid.cell_weight(p);
    th.normalization += mu;
    th.energy += -tau * tau * (ev.sR + h2 + v2 - m / tau) * mu;
    th.entropy += -(tau * (ev.sR + h2 + v2) + fs - 2.0 * m) * mu;
    // |X|^2 in the metric |g|: sum of squares of S X S with S = |g|^(-1/2).
    const std::vector<double> H = second_covariant(ev.G, ev.f, ev.fd);
    Eigen::MatrixXd X(D, D), g(D, D);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        g(a, b) = ev.fd.g(a, b).v;
        X(a, b) = ev.drive[a * D + b] + H[a * D + b] - g(a, b) / (2 * tau);
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::VectorXd isq = es.eigenvalues().cwiseAbs().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd S = es.eigenvectors() * isq.asDiagonal() * es.eigenvectors().transpose();
    th.sigma += 2 * std::pow(tau, 4) * (S * X * S).squaredNorm() * mu;
  }
  return th;
}

namespace {

// Symmetrized h- and v-blocks of the canonical Ricci at every node.
std::vector<double> block_ricci(const FlowState& s) {
  const int m = s.m, D = 2 * m;
  const auto evs = evaluate_all(s, ConnMode::Canonical, false);
  std::vector<double> R(s.nodes() * D * D, 0.0);
  for (std::size_t p = 0; p < s.nodes(); ++p)
    for (int al = 0; al < D; ++al)
      for (int be = 0; be < D; ++be)
        if ((al < m) == (be < m)) R[p * D * D + al * D + be] = 0.5 * (evs[p].ric[al * D + be] + evs[p].ric[be * D + al]);
  return R;
}

}  // namespace

VielbeinField init_vielbein(const FlowState& s) {
  const int m = s.m, D = 2 * m;
  VielbeinField e;
  e.m = m;
  e.E.assign(s.nodes() * D * D, 0.0);
  e.eta.assign(D, 1.0);
  for (std::size_t p = 0; p < s.nodes(); ++p)
    for (int which = 0; which < 2; ++which) {
      const Eigen::MatrixXd gi = block(which ? s.gv : s.gh, p, m).inverse();
      double sign = 1.0;
      Eigen::LLT<Eigen::MatrixXd> llt(gi);
      if (llt.info() != Eigen::Success) {
        sign = -1.0;
        llt.compute(-gi);
      }
      if (llt.info() != Eigen::Success)
        throw DegeneracyError("vielbein factorization fails for an indefinite block at " + where(s.grid.point(p)));
      if (p > 0 && e.eta[which * m] != sign) throw DegeneracyError("block signature changes across the grid");
      const Eigen::MatrixXd L = llt.matrixL();
      for (int i = 0; i < m; ++i) {
        e.eta[which * m + i] = sign;
        for (int j = 0; j < m; ++j) e.E[p * D * D + (which * m + i) * D + which * m + j] = L(i, j);
      }
    }
  return e;
}

VielbeinField frame_flow_step(const FlowState& s, const VielbeinField& e, double dtau) {
  const int m = s.m, D = 2 * m;
  if (e.m != m || e.E.size() != s.nodes() * D * D) throw DimensionError("vielbein does not match the state");
  const std::vector<double> R = block_ricci(s);
  VielbeinField out = e;
  for (std::size_t p = 0; p < s.nodes(); ++p) {
    Eigen::MatrixXd ginv = Eigen::MatrixXd::Zero(D, D), Ric(D, D), E(D, D);
    ginv.topLeftCorner(m, m) = block(s.gh, p, m).inverse();
    ginv.bottomRightCorner(m, m) = block(s.gv, p, m).inverse();
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        Ric(a, b) = R[p * D * D + a * D + b];
        E(a, b) = e.E[p * D * D + a * D + b];
      }
    const Eigen::MatrixXd En = E + dtau * ginv * Ric * E;
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) out.E[p * D * D + a * D + b] = En(a, b);
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> vielbein_metric(const VielbeinField& e) {
  const int m = e.m, D = 2 * m;
  const std::size_t nodes = e.E.size() / (D * D);
  std::vector<double> gh(nodes * m * m), gv(nodes * m * m);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(D, D);
  for (int a = 0; a < D; ++a) eta(a, a) = e.eta[a];
  for (std::size_t p = 0; p < nodes; ++p) {
    Eigen::MatrixXd E(D, D);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) E(a, b) = e.E[p * D * D + a * D + b];
    const Eigen::MatrixXd gi = E * eta * E.transpose();
    const Eigen::MatrixXd h = gi.topLeftCorner(m, m).inverse(), v = gi.bottomRightCorner(m, m).inverse();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        gh[p * m * m + i * m + j] = h(i, j);
        gv[p * m * m + i * m + j] = v(i, j);
      }
  }
  return {gh, gv};
}

}  // namespace ldalg
