#include "ldalg/soliton.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "ldalg/errors.hpp"

namespace ldalg {

std::string_view soliton_type_name(SolitonType t) {
  switch (t) {
    case SolitonType::Steady: return "steady";
    case SolitonType::Shrinking: return "shrinking";
    case SolitonType::Expanding: return "expanding";
  }
  return "unknown";
}

std::string_view solution_class_name(SolutionClass c) { return c == SolutionClass::LeviCivita ? "lc" : "torsion"; }

void SolitonProblem::validate() const {
  if (alg.n() != 2 || alg.m() != 2) throw SpecError("soliton problems need n = m = 2");
  for (int k = 0; k < 4; ++k)
    if (eps[k] != 1 && eps[k] != -1) throw SpecError("signature tag eps" + std::to_string(k + 1) + " must be +1 or -1");
  if (!std::isfinite(lambda)) throw SpecError("lambda must be finite");
  alg.validate();
}

SolitonType SolitonProblem::type() const {
  if (lambda == 0.0) return SolitonType::Steady;
  return lambda > 0 ? SolitonType::Shrinking : SolitonType::Expanding;
}

bool SolitonReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

const Check* SolitonReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

double SolitonReport::value(std::string_view name) const {
  const Check* c = find(name);
  return c ? c->value : std::numeric_limits<double>::quiet_NaN();
}

double SolitonResidual::max() const { return std::max(*std::max_element(block.begin(), block.end()), potential); }

namespace {

constexpr int kX3 = 2;  // coordinate index of y3
constexpr int kX4 = 3;  // coordinate index of y4

// X_a f = rho^i_a d_i f
double X(const GeometryJets& J, int a, const Jet& f) {
  double s = 0.0;
  for (int i = 0; i < J.n; ++i) s += J.rho[i * J.m + a].v * f.d[i];
  return s;
}

// X_a (X_a f) with the anchor derivative term.
double XX(const GeometryJets& J, int a, const Jet& f) {
  double s = 0.0;
  for (int i = 0; i < J.n; ++i) {
    const Jet& ri = J.rho[i * J.m + a];
    for (int j = 0; j < J.n; ++j) {
      const Jet& rj = J.rho[j * J.m + a];
      s += ri.v * rj.v * f.hess(i, j) + ri.v * rj.d[i] * f.d[j];
    }
  }
  return s;
}

// X_a (f*)
double Xd3(const GeometryJets& J, int a, const Jet& f) {
  double s = 0.0;
  for (int i = 0; i < J.n; ++i) s += J.rho[i * J.m + a].v * f.hess(i, kX3);
  return s;
}

std::string where(std::span<const double> p) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < p.size(); ++k) os << (k ? ", " : "") << p[k];
  os << ")";
  return os.str();
}

void check_ansatz(const GeometryJets& J) {
  if (J.n != 2 || J.m != 2) throw SpecError("component equations need n = m = 2");
  auto killing = [&](const Jet& f, const char* what) {
    if (std::fabs(f.d[kX4]) > 1e-12) throw SpecError(std::string("ansatz violation: ") + what + " depends on y4", where(J.point));
  };
  for (int k = 0; k < 4; ++k) {
    killing(J.gh[k], "h-block");
    killing(J.gv[k], "v-block");
    killing(J.N[k], "N-connection");
    if (std::fabs(J.gh[k].d[kX3]) > 1e-12) throw SpecError("ansatz violation: h-block depends on y3", where(J.point));
  }
  if (std::fabs(J.gh[1].v) > 1e-12 || std::fabs(J.gv[1].v) > 1e-12)
    throw SpecError("ansatz violation: blocks are not diagonal", where(J.point));
}

struct Components {
  double e1, e2;
  std::array<double, 2> e3, e4, e4p;
};

Components components(const GeometryJets& J) {
  const Jet &g1 = J.gh[0], &g2 = J.gh[3], &h3 = J.gv[0], &h4 = J.gv[3];
  Components c{};
  c.e1 = (XX(J, 0, g2) - X(J, 0, g1) * X(J, 0, g2) / (2 * g1.v) - X(J, 0, g2) * X(J, 0, g2) / (2 * g2.v) + XX(J, 1, g1) -
          X(J, 1, g1) * X(J, 1, g2) / (2 * g2.v) - X(J, 1, g1) * X(J, 1, g1) / (2 * g1.v)) /
         (2 * g1.v * g2.v);
  const double s3 = h3.d[kX3], s4 = h4.d[kX3], ss4 = h4.hess(kX3, kX3);
  const double br = ss4 - s4 * s4 / (2 * h4.v) - s3 * s4 / (2 * h3.v);
  c.e2 = br / (2 * h3.v * h4.v);
  const double gamma = 1.5 * s4 / h4.v - s3 / h3.v;
  for (int a = 0; a < 2; ++a) {
    const double w = J.N[0 * 2 + a].v;
    c.e3[a] = w / (2 * h4.v) * br + s4 / (4 * h4.v) * (X(J, a, h3) / h3.v + X(J, a, h4) / h4.v) - Xd3(J, a, h4) / (2 * h4.v);
    const Jet& n = J.N[1 * 2 + a];
    const double n1 = n.d[kX3], n2 = n.hess(kX3, kX3);
    c.e4[a] = -(h4.v / (2 * h3.v)) * (n2 + gamma * n1);
    c.e4p[a] = h4.v / (2 * h3.v) * n2 + (h4.v / h3.v * s3 - 1.5 * s4) * n1 / (2 * h3.v);
  }
  return c;
}

Jet lift(const Jet& j2, int dim) {
  Jet j = Jet::constant(dim, j2.v, j2.order);
  for (int k = 0; k < j2.dim; ++k) {
    j.d[k] = j2.d[k];
    for (int l = 0; l < j2.dim; ++l) j.hess(k, l) = j2.hess(k, l);
  }
  return j;
}

Jet signed_log_half(const Jet& f) { return 0.5 * log(f.v < 0 ? -f : f); }

}  // namespace

// ---- residual checkers ----

SolitonResidual soliton_residual(const GeometrySource& src, const Expr& kappa, double lambda, const PointList& points,
                                 const std::optional<std::array<double, 4>>& kappa_const) {
  SolitonResidual r;
  double worst = -1.0;
  for (const auto& p : points) {
    FrameData fd(src(p));
    const int D = fd.D();
    const Conn G = canonical_dconnection()(fd);
    const auto ric = ricci(curvature(G, fd), D);
    const Jet k = jet_eval(kappa, p);
    const auto dd = second_covariant(G, k, fd);
    double here = 0.0;
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c) {
        const double v = std::fabs(ric[b * D + c] + dd[b * D + c] - lambda * fd.g(b, c).v);
        const int blk = 2 * (b >= fd.m()) + (c >= fd.m());
        r.block[blk] = std::max(r.block[blk], v);
        here = std::max(here, v);
      }
    if (kappa_const)
      for (int a = 0; a < D && a < 4; ++a) {
        const double v = std::fabs(fd.e(a, k).v - (*kappa_const)[a]);
        r.potential = std::max(r.potential, v);
        here = std::max(here, v);
      }
    if (here > worst) {
      worst = here;
      r.worst_point = p;
    }
  }
  return r;
}

SolitonResidual soliton_residual(const LieAlgebroid& alg, const NConnection& N, const DMetric& g, const Expr& kappa,
                                 double lambda, const PointList& points,
                                 const std::optional<std::array<double, 4>>& kappa_const) {
  return soliton_residual(symbolic_source(alg, N, g), kappa, lambda, points, kappa_const);
}

ComponentResiduals component_residuals(const GeometrySource& src, const PointList& points, double lambda,
                                       bool pipeline) {
  ComponentResiduals r;
  for (const auto& p : points) {
    const GeometryJets J = src(p);
    check_ansatz(J);
    const Components c = components(J);
    r.eq1b = std::max(r.eq1b, std::fabs(c.e1 - lambda));
    r.eq2b = std::max(r.eq2b, std::fabs(c.e2 - lambda));
    for (int a = 0; a < 2; ++a) {
      r.eq3b = std::max(r.eq3b, std::fabs(c.e3[a]));
      r.eq4b = std::max(r.eq4b, std::fabs(c.e4[a]));
      r.eq4b_printed = std::max(r.eq4b_printed, std::fabs(c.e4p[a]));
    }
    if (!pipeline) continue;
    FrameData fd(J);
    const auto ric = ricci(curvature(canonical_dconnection()(fd), fd), 4);
    const double R11 = -ric[0] / J.gh[0].v, R22 = -ric[5] / J.gh[3].v;
    const double R33 = -ric[10] / J.gv[0].v, R44 = -ric[15] / J.gv[3].v;
    double d = std::max({std::fabs(c.e1 - R11), std::fabs(c.e1 - R22), std::fabs(c.e2 - R33), std::fabs(c.e2 - R44)});
    for (int a = 0; a < 2; ++a) {
      d = std::max({d, std::fabs(c.e3[a] - ric[2 * 4 + a]), std::fabs(c.e4[a] - ric[3 * 4 + a])});
      r.eq4b_printed_vs_pipeline = std::max(r.eq4b_printed_vs_pipeline, std::fabs(c.e4p[a] - ric[3 * 4 + a]));
    }
    r.two_route = std::max(r.two_route, d);
    r.ricci33 = std::max(r.ricci33, std::fabs(R33 - lambda));
    r.ricci44 = std::max(r.ricci44, std::fabs(R44 - lambda));
  }
  return r;
}

LcResiduals lc_residuals(const GeometrySource& src, const PointList& points) {
  LcResiduals r;
  for (const auto& p : points) {
    const GeometryJets J = src(p);
    const Jet l3 = signed_log_half(J.gv[0]), l4 = signed_log_half(J.gv[3]);
    for (int a = 0; a < 2; ++a) {
      const Jet& w = J.N[a];
      r.w_star = std::max(r.w_star, std::fabs(w.d[kX3] - (X(J, a, l3) - w.v * l3.d[kX3])));
      r.h4_shift = std::max(r.h4_shift, std::fabs(X(J, a, l4) - w.v * l4.d[kX3]));
      r.n_star = std::max(r.n_star, std::fabs(J.N[2 + a].d[kX3]));
    }
    r.w_curl = std::max(r.w_curl, std::fabs(X(J, 1, J.N[0]) - X(J, 0, J.N[1])));
    r.n_curl = std::max(r.n_curl, std::fabs(X(J, 0, J.N[3]) - X(J, 1, J.N[2])));
  }
  return r;
}

double distortion_norm(const GeometrySource& src, const PointList& points) {
  double z = 0.0;
  for (const auto& p : points) {
    FrameData fd(src(p));
    const Conn Z = distortion(levi_civita()(fd), canonical_dconnection()(fd));
    for (const auto& j : Z) z = std::max(z, std::fabs(j.v));
  }
  return z;
}

// ---- h-block equation ----

std::size_t HSolution::node_at(double x1, double x2) const {
  std::vector<int> idx(2);
  const double x[2] = {x1, x2};
  for (int k = 0; k < 2; ++k) {
    const double h = grid.spacing(k);
    const long i = std::lround((x[k] - grid.box[k].first) / h);
    if (i < 0 || i >= grid.resolution[k] || std::fabs(grid.coord(k, static_cast<int>(i)) - x[k]) > 1e-9 * std::max(1.0, std::fabs(x[k])))
      throw SpecError("psi is known only at its grid nodes", where(std::span<const double>(x, 2)));
    idx[k] = static_cast<int>(i);
  }
  return grid.flat_index(idx);
}

bool HSolution::interior(std::size_t node) const {
  const auto idx = grid.multi_index(node);
  for (int k = 0; k < 2; ++k)
    if (idx[k] == 0 || idx[k] == grid.resolution[k] - 1) return false;
  return true;
}

namespace {

// Constant-coefficient parts of the anchored operator at a point:
// sum_kl A_kl d_kl psi + sum_l b_l d_l psi.
struct HCoeffs {
  double A[2][2];
  double b[2];
};

HCoeffs h_coeffs(const HEquation& eq, const LieAlgebroid& alg, std::span<const double> p) {
  HCoeffs c{};
  const int eps[2] = {eq.eps1, eq.eps2};
  for (int a = 0; a < 2; ++a) {
    Jet r[2] = {jet_eval(alg.rho(0, a), p), jet_eval(alg.rho(1, a), p)};
    for (int k = 0; k < 2; ++k) {
      for (int l = 0; l < 2; ++l) c.A[k][l] += eps[a] * r[k].v * r[l].v;
      for (int i = 0; i < 2; ++i) c.b[k] += eps[a] * r[i].v * r[k].d[i];
    }
  }
  return c;
}

std::vector<double> full_point(double x1, double x2, int dim) {
  std::vector<double> p(dim, 0.0);
  p[0] = x1;
  p[1] = x2;
  return p;
}

}  // namespace

HSolution solve_h_equation(const HEquation& eq, const LieAlgebroid& alg, const GridSpec& grid_in, const Expr& boundary) {
  if (eq.eps1 * eq.eps2 < 0)
    throw SpecError("hyperbolic signature: the solver handles eps1 eps2 > 0; check a supplied psi with h_equation_residual");
  if ((eq.eps1 != 1 && eq.eps1 != -1) || (eq.eps2 != 1 && eq.eps2 != -1)) throw SpecError("eps1, eps2 must be +1 or -1");
  if (alg.n() != 2 || alg.m() != 2) throw SpecError("the h-block equation needs n = m = 2");
  HSolution sol;
  sol.grid = grid_in;
  sol.grid.rule = Quadrature::Trapezoid;
  const GridSpec& g = sol.grid;
  if (g.dim() != 2) throw SpecError("the h-block grid is 2-dimensional");
  g.validate();
  if (g.resolution[0] < 3 || g.resolution[1] < 3) throw SpecError("the h-block grid needs 3 nodes per axis");
  const int dim = alg.coords().size();
  const double h1 = g.spacing(0), h2 = g.spacing(1);

  sol.psi.assign(g.total(), 0.0);
  std::vector<int> unknown(g.total(), -1);
  std::vector<std::size_t> nodes;
  double bsum = 0.0;
  int bcount = 0;
  for (std::size_t q = 0; q < g.total(); ++q) {
    const auto p = g.point(q);
    if (sol.interior(q)) {
      unknown[q] = static_cast<int>(nodes.size());
      nodes.push_back(q);
    } else {
      sol.psi[q] = eval(boundary, full_point(p[0], p[1], dim));
      if (!std::isfinite(sol.psi[q])) throw DomainError("boundary psi is not finite at " + where(p));
      bsum += sol.psi[q];
      ++bcount;
    }
  }
  for (auto q : nodes) sol.psi[q] = bsum / bcount;

  // Linear operator rows for interior nodes over all node columns.
  const int U = static_cast<int>(nodes.size());
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(U);
  std::vector<double> fixed_rhs(U, 0.0);
  for (int r = 0; r < U; ++r) {
    const auto idx = g.multi_index(nodes[r]);
    const auto p = g.point(nodes[r]);
    const auto fp = full_point(p[0], p[1], dim);
    const HCoeffs c = h_coeffs(eq, alg, fp);
    auto at = [&](int di, int dj) { return g.flat_index({idx[0] + di, idx[1] + dj}); };
    auto& row = rows[r];
    row.push_back({at(1, 0), c.A[0][0] / (h1 * h1) + c.b[0] / (2 * h1)});
    row.push_back({at(-1, 0), c.A[0][0] / (h1 * h1) - c.b[0] / (2 * h1)});
    row.push_back({at(0, 1), c.A[1][1] / (h2 * h2) + c.b[1] / (2 * h2)});
    row.push_back({at(0, -1), c.A[1][1] / (h2 * h2) - c.b[1] / (2 * h2)});
    row.push_back({at(0, 0), -2 * c.A[0][0] / (h1 * h1) - 2 * c.A[1][1] / (h2 * h2)});
    const double mixed = 2 * c.A[0][1] / (4 * h1 * h2);
    if (mixed != 0.0) {
      row.push_back({at(1, 1), mixed});
      row.push_back({at(-1, -1), mixed});
      row.push_back({at(1, -1), -mixed});
      row.push_back({at(-1, 1), -mixed});
    }
    if (eq.form == HForm::Printed) fixed_rhs[r] = eq.source ? eval(*eq.source, fp) : 2 * eq.lambda;
  }

  std::vector<Eigen::Triplet<double>> lin;
  for (int r = 0; r < U; ++r)
    for (const auto& [q, w] : rows[r])
      if (unknown[q] >= 0) lin.emplace_back(r, unknown[q], w);

  auto residual = [&](Eigen::VectorXd& F) {
    F.resize(U);
    for (int r = 0; r < U; ++r) {
      double s = 0.0;
      for (const auto& [q, w] : rows[r]) s += w * sol.psi[q];
      const double rhs = eq.form == HForm::Liouville ? 2 * eq.lambda * std::exp(sol.psi[nodes[r]]) : fixed_rhs[r];
      F[r] = s - rhs;
    }
    return F.cwiseAbs().maxCoeff();
  };

  Eigen::VectorXd F;
  double res = residual(F);
  int it = 0;
  while (!(res < 1e-10)) {
    if (!std::isfinite(res)) throw NumericError("h-block solve diverged");
    if (it == 30) throw NumericError("h-block solve did not converge in 30 iterations (residual " + std::to_string(res) + ")");
    auto trip = lin;
    if (eq.form == HForm::Liouville)
      for (int r = 0; r < U; ++r) trip.emplace_back(r, r, -2 * eq.lambda * std::exp(sol.psi[nodes[r]]));
    Eigen::SparseMatrix<double> Jm(U, U);
    Jm.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(Jm);
    if (lu.info() != Eigen::Success) throw NumericError("h-block Jacobian is singular");
    const Eigen::VectorXd delta = lu.solve(-F);
    for (int r = 0; r < U; ++r) sol.psi[nodes[r]] += delta[r];
    ++it;
    res = residual(F);
  }
  sol.residual = res;
  sol.iterations = it;
  return sol;
}

double h_equation_residual(const HEquation& eq, const LieAlgebroid& alg, const Expr& psi, const PointList& points) {
  double worst = 0.0;
  for (const auto& p : points) {
    const HCoeffs c = h_coeffs(eq, alg, p);
    const Jet j = jet_eval(psi, p);
    double op = 0.0;
    for (int k = 0; k < 2; ++k) {
      op += c.b[k] * j.d[k];
      for (int l = 0; l < 2; ++l) op += c.A[k][l] * j.hess(k, l);
    }
    double rhs = eq.form == HForm::Liouville ? 2 * eq.lambda * std::exp(j.v) : 2 * eq.lambda;
    if (eq.form == HForm::Printed && eq.source) rhs = eval(*eq.source, p);
    worst = std::max(worst, std::fabs(op - rhs));
  }
  return worst;
}

// ---- generation ----

VData generate_v_data(const Expr& Phi, double lambda, int eps3, int eps4, const Expr& h4_0) {
  if (lambda == 0.0) throw SpecError("lambda = 0: the v-block integration formulas divide by lambda");
  if ((eps3 != 1 && eps3 != -1) || (eps4 != 1 && eps4 != -1)) throw SpecError("eps3, eps4 must be +1 or -1");
  VData v;
  v.h4 = simplify(h4_0 + (eps3 * eps4 / (4 * lambda)) * (Phi * Phi));
  v.h3 = simplify((1 / (2 * lambda)) * (diff(Phi, kX3) / Phi) * (diff(v.h4, kX3) / v.h4));
  return v;
}

std::array<Expr, 2> generate_w(const Expr& Phi, const LieAlgebroid& alg, const PointList& check_points) {
  const Expr star = simplify(diff(Phi, kX3));
  for (const auto& p : check_points) {
    const double s = eval(star, p);
    if (!(std::fabs(s) > 1e-12)) throw NumericError("d Phi / d y3 vanishes at " + where(p));
  }
  std::array<Expr, 2> w;
  for (int a = 0; a < 2; ++a) {
    Expr x;
    for (int i = 0; i < alg.n(); ++i) x = x + alg.rho(i, a) * diff(Phi, i);
    w[a] = simplify(simplify(x) / star);
  }
  return w;
}

NField::NField(Expr h3, Expr h4, std::array<Expr, 2> n1, std::array<Expr, 2> n2, double y0)
    : h3_(std::move(h3)), h4_(std::move(h4)), n1_(std::move(n1)), n2_(std::move(n2)), y0_(y0),
      cache_(std::make_shared<Cache>()) {
  trivial_ = true;
  for (auto& e : n2_) {
    e = simplify(e);
    if (!e.is_const(0.0)) trivial_ = false;
  }
}

Jet NField::integrand(double x1, double x2, double t) const {
  const double p[4] = {x1, x2, t, 0.0};
  const Jet a = jet_eval(h3_, p), b = jet_eval(h4_, p);
  if (!(std::fabs(b.v) >= 1e-12)) throw NumericError("n integrand is singular: |h4| < 1e-12 at " + where(p));
  return a * pow(b.v < 0 ? -b : b, -1.5);
}

Jet NField::antiderivative(std::span<const double> p) const {
  using boost::math::quadrature::gauss_kronrod;
  const double x1 = p[0], x2 = p[1], y3 = p[2];
  std::array<double, 6> acc{};
  double from = y0_;
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto& line = cache_->lines[{x1, x2}];
    if (auto it = line.find(y3); it != line.end()) {
      acc = it->second;
      from = y3;
    } else {
      double best = std::fabs(y3 - y0_);
      for (const auto& [t, v] : line)
        if (std::fabs(y3 - t) < best) {
          best = std::fabs(y3 - t);
          from = t;
          acc = v;
        }
    }
  }
  if (from != y3) {
    std::map<double, Jet> memo;
    auto q = [&](double t) -> const Jet& {
      auto it = memo.find(t);
      if (it == memo.end()) it = memo.emplace(t, integrand(x1, x2, t)).first;
      return it->second;
    };
    auto comp = [](const Jet& j, int k) {
      switch (k) {
        case 0: return j.v;
        case 1: return j.d[0];
        case 2: return j.d[1];
        case 3: return j.hess(0, 0);
        case 4: return j.hess(0, 1);
        default: return j.hess(1, 1);
      }
    };
    for (int k = 0; k < 6; ++k) {
      double err = 0.0, l1 = 0.0;
      const double v =
          gauss_kronrod<double, 15>::integrate([&](double t) { return comp(q(t), k); }, from, y3, 15, 1e-13, &err, &l1);
      if (!(err <= std::max(1e-10, 1e-13 * l1)))
        throw NumericError("n quadrature missed the 1e-10 tolerance at " + where(p));
      acc[k] += v;
    }
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->lines[{x1, x2}][y3] = acc;
  }
  const Jet top = integrand(x1, x2, y3);
  Jet I = Jet::constant(4, acc[0], 2);
  I.d[0] = acc[1];
  I.d[1] = acc[2];
  I.d[kX3] = top.v;
  I.hess(0, 0) = acc[3];
  I.hess(0, 1) = I.hess(1, 0) = acc[4];
  I.hess(1, 1) = acc[5];
  for (int i = 0; i < 3; ++i) I.hess(i, kX3) = I.hess(kX3, i) = top.d[i];
  return I;
}

Jet NField::jet(int b, std::span<const double> p) const {
  Jet j = jet_eval(n1_[b], p);
  if (trivial_) return j;
  const Jet c = jet_eval(n2_[b], p);
  if (c.is_zero()) return j;
  return j + c * antiderivative(p);
}

Jet PsiField::jet(std::span<const double> p) const {
  if (expr) return jet_eval(*expr, p);
  if (!grid) throw SpecError("psi is not set");
  const std::size_t node = grid->node_at(p[0], p[1]);
  return lift(grid_jet(grid->grid, grid->psi, node), static_cast<int>(p.size()));
}

GeometrySource SolitonSolution::source() const {
  DMetric g(2);
  g.set_h(0, 0, Expr::constant(1.0));
  g.set_h(1, 1, Expr::constant(1.0));
  g.set_v(0, 0, h3);
  g.set_v(1, 1, h4);
  NConnection N(2, 2);
  N(0, 0) = w[0];
  N(0, 1) = w[1];
  auto base = symbolic_source(problem.alg, N, g);
  return [base, psi = psi, nf = n, e1 = problem.eps[0], e2 = problem.eps[1]](std::span<const double> p) {
    GeometryJets J = base(p);
    const Jet ep = exp(psi.jet(p));
    J.gh[0] = e1 * ep;
    J.gh[3] = e2 * ep;
    J.N[2] = nf.jet(0, p);
    J.N[3] = nf.jet(1, p);
    return J;
  };
}

std::string SolitonSolution::metric_text() const {
  const Coords& c = problem.alg.coords();
  std::ostringstream os;
  os << "# " << solution_class_name(cls) << "-class soliton, lambda = " << problem.lambda << "\n";
  os << "[metric]\n";
  for (int a = 0; a < 2; ++a) {
    if (psi.expr)
      os << "h." << a + 1 << "." << a + 1 << " = " << (problem.eps[a] < 0 ? "-" : "") << "exp(" << print(*psi.expr, c)
         << ")\n";
    else
      os << "# h." << a + 1 << "." << a + 1 << " = " << problem.eps[a] << " * exp(psi), psi solved on a "
         << psi.grid->grid.resolution[0] << " x " << psi.grid->grid.resolution[1] << " grid\n";
  }
  os << "v.1.1 = " << print(h3, c) << "\n";
  os << "v.2.2 = " << print(h4, c) << "\n";
  os << "[nconnection]\n";
  for (int a = 0; a < 2; ++a) os << "N.1." << a + 1 << " = " << print(w[a], c) << "\n";
  if (n.has_integral())
    os << "# N.2.b = n1_b + n2_b * integral of h3 / |h4|^(3/2) dy3 from " << n.y0() << " (quadrature)\n";
  else
    for (int a = 0; a < 2; ++a) os << "N.2." << a + 1 << " = " << print(n.n1(a), c) << "\n";
  return os.str();
}

SolitonRejected::SolitonRejected(SolitonSolution s)
    : std::runtime_error("assembled soliton rejected: residuals above tolerance"),
      sol_(std::make_shared<SolitonSolution>(std::move(s))) {}

SolitonReport residual_battery(const SolitonSolution& s, double tol) {
  SolitonReport rep;
  const auto src = s.source();
  const double lambda = s.problem.lambda;
  const auto comp = component_residuals(src, s.points, lambda, true);
  auto add = [&](std::string name, double v, double t, bool enforced) { rep.checks.push_back({std::move(name), v, t, enforced}); };
  if (s.psi.grid) add("eq1_discrete", s.psi.grid->residual, 1e-8, true);
  add("eq1b", comp.eq1b, tol, true);
  add("eq2b", comp.eq2b, tol, true);
  add("eq3b", comp.eq3b, tol, true);
  add("eq4b", comp.eq4b, tol, true);
  add("eq4b_as_printed", comp.eq4b_printed, tol, false);
  add("pipeline_R33", comp.ricci33, tol, true);
  add("pipeline_R44", comp.ricci44, tol, true);
  add("two_route", comp.two_route, tol, true);
  add("eq4b_as_printed_vs_pipeline", comp.eq4b_printed_vs_pipeline, tol, false);
  const bool lc = s.cls == SolutionClass::LeviCivita;
  const auto l = lc_residuals(src, s.points);
  add("lccondb_w_star", l.w_star, tol, lc);
  add("lccondb_h4_shift", l.h4_shift, tol, lc);
  add("lccondb_w_curl", l.w_curl, tol, lc);
  add("lccondb_n_star", l.n_star, tol, lc);
  add("lccondb_n_curl", l.n_curl, tol, lc);
  add("distortion_norm", distortion_norm(src, s.points), tol, lc);
  add("soliton_residual", soliton_residual(src, s.problem.kappa, lambda, s.points).max(), tol, false);
  add("soliton_residual_negated_lambda", soliton_residual(src, s.problem.kappa, -lambda, s.points).max(), tol, false);

  std::ostringstream os;
  os << "type " << soliton_type_name(s.problem.type()) << "; lambda raw " << lambda << ", absorbed eps3 eps4 lambda "
     << s.problem.eps[2] * s.problem.eps[3] * lambda;
  rep.notes.push_back(os.str());
  rep.notes.push_back(
      "component equations give Ric = -lambda g on every block; the soliton residual with kappa constant vanishes for "
      "-lambda");
  if (lambda < 0)
    rep.notes.push_back("the quadratic-element form uses Phi^2 / 4|lambda| for h4; generation used Phi^2 / 4 lambda");
  if (!s.points.empty()) {
    const double h4v = eval(s.h4, s.points.front());
    if ((h4v > 0) != (s.problem.eps[3] > 0)) rep.notes.push_back("sign of h4 disagrees with the eps4 tag");
  }
  return rep;
}

SolitonSolution assemble(const SolitonProblem& prob, const GeneratingData& gen, SolutionClass cls,
                         const AssembleOptions& opt) {
  prob.validate();
  if (!gen.psi.expr && !gen.psi.grid) throw SpecError("generating data needs psi");
  if (opt.y3_samples < 1 || !(opt.y3_range.first <= opt.y3_range.second)) throw SpecError("bad y3 sample range");
  const int dim = prob.alg.coords().size();

  SolitonSolution s;
  s.problem = prob;
  s.cls = cls;
  s.psi = gen.psi;

  // Check points: interior psi nodes (thinned) times y3 samples.
  std::vector<std::pair<double, double>> xs;
  const int cap = std::max(1, opt.max_nodes_per_axis);
  if (gen.psi.grid) {
    const auto& g = gen.psi.grid->grid;
    std::vector<int> pick[2];
    for (int k = 0; k < 2; ++k) {
      const int inner = g.resolution[k] - 2;
      const int stride = std::max(1, (inner + cap - 1) / cap);
      for (int i = 1; i <= inner; i += stride) pick[k].push_back(i);
    }
    for (int i : pick[0])
      for (int j : pick[1]) xs.push_back({g.coord(0, i), g.coord(1, j)});
  } else {
    auto box = opt.x_box.empty() ? std::vector<std::pair<double, double>>{{-0.5, 0.5}, {-0.5, 0.5}} : opt.x_box;
    for (int i = 0; i < cap; ++i)
      for (int j = 0; j < cap; ++j)
        xs.push_back({box[0].first + (box[0].second - box[0].first) * (i + 0.5) / cap,
                      box[1].first + (box[1].second - box[1].first) * (j + 0.5) / cap});
  }
  for (const auto& [x1, x2] : xs)
    for (int k = 0; k < opt.y3_samples; ++k) {
      const double t = opt.y3_samples == 1 ? 0.5 : static_cast<double>(k) / (opt.y3_samples - 1);
      auto p = full_point(x1, x2, dim);
      p[kX3] = opt.y3_range.first + t * (opt.y3_range.second - opt.y3_range.first);
      s.points.push_back(std::move(p));
    }

  for (const auto& p : s.points)
    if (!(eval(gen.Phi, p) > 0)) throw SpecError("generating function must be positive", where(p));

  std::array<Expr, 2> n1 = gen.n1, n2 = gen.n2;
  if (cls == SolutionClass::LeviCivita) {
    for (const auto& e : n2)
      if (!simplify(e).is_const(0.0)) throw SpecError("lc class needs n2_b = 0");
    if (gen.n_potential)
      for (int b = 0; b < 2; ++b) {
        Expr x;
        for (int i = 0; i < prob.alg.n(); ++i) x = x + prob.alg.rho(i, b) * diff(*gen.n_potential, i);
        n1[b] = simplify(x);
      }
    // (X_a Phi)* = X_a (Phi*) on the check points.
    for (const auto& p : s.points) {
      const Jet ph = jet_eval(gen.Phi, p);
      for (int a = 0; a < 2; ++a) {
        double lhs = 0.0, rhs = 0.0;
        for (int i = 0; i < 2; ++i) {
          const Jet r = jet_eval(prob.alg.rho(i, a), p);
          lhs += r.v * ph.hess(i, kX3) + r.d[kX3] * ph.d[i];
          rhs += r.v * ph.hess(i, kX3);
        }
        if (std::fabs(lhs - rhs) > 1e-9) throw SpecError("lc class needs (X_a Phi)* = X_a (Phi*)", where(p));
      }
    }
  }

  const VData v = generate_v_data(gen.Phi, prob.lambda, prob.eps[2], prob.eps[3], gen.h4_0);
  s.h3 = v.h3;
  s.h4 = v.h4;
  s.w = generate_w(gen.Phi, prob.alg, s.points);
  if (cls == SolutionClass::LeviCivita && gen.A_tilde)
    for (const auto& p : s.points) {
      const Jet A = jet_eval(*gen.A_tilde, p);
      for (int a = 0; a < 2; ++a) {
        double xa = 0.0;
        for (int i = 0; i < 2; ++i) xa += eval(prob.alg.rho(i, a), p) * A.d[i];
        if (std::fabs(eval(s.w[a], p) - xa) > opt.tolerance) throw SpecError("w_a differs from X_a A", where(p));
      }
    }
  s.n = NField(s.h3, s.h4, n1, n2, gen.y0);

  s.report = residual_battery(s, opt.tolerance);
  if (!s.report.pass()) throw SolitonRejected(std::move(s));
  return s;
}

std::vector<std::array<double, 4>> polarizations(const GeometrySource& prime, const GeometrySource& target,
                                                 const PointList& points) {
  std::vector<std::array<double, 4>> out;
  for (const auto& p : points) {
    const GeometryJets a = prime(p), b = target(p);
    if (a.m != 2 || b.m != 2) throw SpecError("polarizations need m = 2");
    const double pr[4] = {a.gh[0].v, a.gh[3].v, a.gv[0].v, a.gv[3].v};
    const double tg[4] = {b.gh[0].v, b.gh[3].v, b.gv[0].v, b.gv[3].v};
    std::array<double, 4> eta{};
    for (int k = 0; k < 4; ++k) {
      if (!(std::fabs(pr[k]) > 1e-12)) throw DegeneracyError("prime metric entry vanishes at " + where(p));
      eta[k] = tg[k] / pr[k];
    }
    out.push_back(eta);
  }
  return out;
}

}  // namespace ldalg
