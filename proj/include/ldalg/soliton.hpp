#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ldalg/connection.hpp"
#include "ldalg/flow.hpp"

namespace ldalg {

enum class SolitonType { Steady, Shrinking, Expanding };
std::string_view soliton_type_name(SolitonType t);

// 2 + 2 soliton data. Frame axes 1, 2 are h, 3, 4 are v; y4 is the Killing direction.
struct SolitonProblem {
  double lambda = 0.0;
  std::array<int, 4> eps{1, 1, 1, 1};
  LieAlgebroid alg;
  Expr kappa;                                        // potential; constant by default
  std::optional<std::array<double, 4>> kappa_const;  // frame derivatives e_alpha kappa

  // Throws SpecError unless n = m = 2, every eps is +-1 and the algebroid validates.
  void validate() const;
  SolitonType type() const;
};

// One named residual with its tolerance. Diagnostics are reported but never fail a check.
struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool enforced = true;
  bool pass() const { return !enforced || value <= tolerance; }
};

struct SolitonReport {
  std::vector<Check> checks;
  std::vector<std::string> notes;
  bool pass() const;
  const Check* find(std::string_view name) const;
  double value(std::string_view name) const;  // NaN when absent
};

// ---- residual checkers (accept any lambda, including 0) ----

struct SolitonResidual {
  // max |R_bg + D_b D_g kappa - lambda g_bg| per block hh, hv, vh, vv
  std::array<double, 4> block{};
  // max |delta_a kappa| and |V_A kappa - kappa_A|; 0 without kappa_const
  double potential = 0.0;
  std::vector<double> worst_point;
  double max() const;
};
SolitonResidual soliton_residual(const GeometrySource& src, const Expr& kappa, double lambda, const PointList& points,
                                 const std::optional<std::array<double, 4>>& kappa_const = std::nullopt);
SolitonResidual soliton_residual(const LieAlgebroid& alg, const NConnection& N, const DMetric& g, const Expr& kappa,
                                 double lambda, const PointList& points,
                                 const std::optional<std::array<double, 4>>& kappa_const = std::nullopt);

// Max residuals of the four component equations for a diagonal 2 + 2 metric
// with Killing direction y4; star is d/dy3 and X_a = rho^i_a d_i.
// eq4b is the form that vanishes on the pipeline Ricci, -(h4 / 2 h3)(n** + gamma n*);
// eq4b_printed keeps the displayed coefficients.
struct ComponentResiduals {
  double eq1b = 0.0, eq2b = 0.0, eq3b = 0.0, eq4b = 0.0, eq4b_printed = 0.0;
  // With pipeline: max |component value - canonical Ricci value| over all four,
  // and max |-R^3_3 - lambda|, |-R^4_4 - lambda| from the full Ricci.
  double two_route = 0.0, ricci33 = 0.0, ricci44 = 0.0;
  // max |printed eq4b value - pipeline R_4a|
  double eq4b_printed_vs_pipeline = 0.0;
  double max() const { return std::max({eq1b, eq2b, eq3b, eq4b}); }
};
// Throws SpecError when the ansatz fails: off-diagonal block entries, y4
// dependence above 1e-12, or y-dependence of the h-block.
ComponentResiduals component_residuals(const GeometrySource& src, const PointList& points, double lambda,
                                       bool pipeline = false);

// Levi-Civita conditions: max residual of each term.
struct LcResiduals {
  double w_star = 0.0;     // w_a* - (X_a - w_a d3) ln sqrt|h3|
  double h4_shift = 0.0;   // (X_a - w_a d3) ln sqrt|h4|
  double w_curl = 0.0;     // X_b w_a - X_a w_b
  double n_star = 0.0;     // n_a*
  double n_curl = 0.0;     // X_a n_b - X_b n_a
  double max() const { return std::max({w_star, h4_shift, w_curl, n_star, n_curl}); }
};
LcResiduals lc_residuals(const GeometrySource& src, const PointList& points);
// max over points of |Zhat| = |LeviCivita - canonical| frame coefficients.
double distortion_norm(const GeometrySource& src, const PointList& points);

// ---- h-block equation ----

enum class HForm {
  Printed,   // eps1 X1 X1 psi + eps2 X2 X2 psi = 2 lambda (or the given source)
  Liouville  // eps1 X1 X1 psi + eps2 X2 X2 psi = 2 lambda e^psi, the form the h-block Ricci needs
};

struct HEquation {
  double lambda = 0.0;
  int eps1 = 1, eps2 = 1;
  HForm form = HForm::Liouville;
  std::optional<Expr> source;  // replaces 2 lambda in the printed form
};

// psi on a 2-d trapezoid grid over (x1, x2); the boundary is Dirichlet.
struct HSolution {
  GridSpec grid;
  std::vector<double> psi;
  double residual = 0.0;  // max |anchored operator - right side| over interior nodes
  int iterations = 0;
  // Grid node at (x1, x2); SpecError off the grid.
  std::size_t node_at(double x1, double x2) const;
  bool interior(std::size_t node) const;
};

// Newton with sparse LU on central differences of the anchored operator
// rho^i_a rho^j_a d_ij psi + rho^i_a (d_i rho^j_a) d_j psi. Converged when the
// residual is below 1e-10; NumericError after 30 iterations. A hyperbolic
// signature (eps1 eps2 < 0) is a SpecError: use h_equation_residual instead.
HSolution solve_h_equation(const HEquation& eq, const LieAlgebroid& alg, const GridSpec& grid, const Expr& boundary);
// Max residual of the anchored equation for a closed-form psi, any signature.
double h_equation_residual(const HEquation& eq, const LieAlgebroid& alg, const Expr& psi, const PointList& points);

// ---- generation ----

struct VData {
  Expr h3, h4;
};
// h4 = h4_0 + eps3 eps4 Phi^2 / (4 lambda), h3 = (ln|Phi|)* (ln|h4|)* / (2 lambda). SpecError for lambda = 0.
VData generate_v_data(const Expr& Phi, double lambda, int eps3, int eps4, const Expr& h4_0);
// w_a = X_a Phi / Phi*; NumericError if Phi* vanishes (below 1e-12) at a check point.
std::array<Expr, 2> generate_w(const Expr& Phi, const LieAlgebroid& alg, const PointList& check_points = {});

// n_b = n1_b + n2_b * int_{y0}^{y3} h3 / |h4|^(3/2) dt. Jets come from
// Gauss-Kronrod quadrature (absolute tolerance 1e-10) of the integrand jets,
// cached per (x1, x2) line; NumericError where |h4| < 1e-12.
class NField {
 public:
  NField() = default;
  NField(Expr h3, Expr h4, std::array<Expr, 2> n1, std::array<Expr, 2> n2, double y0);

  // Jet of n_b at a 4-d point (order 2).
  Jet jet(int b, std::span<const double> p) const;
  // int_{y0}^{y3} h3 / |h4|^(3/2) with its x-gradient and x-Hessian.
  Jet antiderivative(std::span<const double> p) const;
  bool has_integral() const { return !trivial_; }
  const Expr& n1(int b) const { return n1_[b]; }
  const Expr& n2(int b) const { return n2_[b]; }
  double y0() const { return y0_; }

 private:
  Jet integrand(double x1, double x2, double t) const;
  Expr h3_, h4_;
  std::array<Expr, 2> n1_, n2_;
  double y0_ = 0.0;
  bool trivial_ = true;
  struct Cache {
    std::mutex mu;
    std::map<std::pair<double, double>, std::map<double, std::array<double, 6>>> lines;
  };
  std::shared_ptr<Cache> cache_;
};

// psi as a closed form or as a solved grid.
struct PsiField {
  std::optional<Expr> expr;
  std::shared_ptr<const HSolution> grid;
  // Order-2 jet in the 4 coordinates (only x-derivatives nonzero).
  Jet jet(std::span<const double> p) const;
};

struct GeneratingData {
  PsiField psi;
  Expr Phi;
  Expr h4_0;
  std::array<Expr, 2> n1, n2;        // integration functions of x
  std::optional<Expr> n_potential;   // lc class: n1_b = X_b n, n2_b = 0
  std::optional<Expr> A_tilde;       // lc class: optional w_a = X_a A check
  double y0 = 0.0;                   // lower limit of the n integral
};

enum class SolutionClass { LeviCivita, Torsion };
std::string_view solution_class_name(SolutionClass c);

struct AssembleOptions {
  std::pair<double, double> y3_range{0.0, 1.0};
  int y3_samples = 3;
  int max_nodes_per_axis = 12;  // interior psi-grid nodes used for check points, per axis
  double tolerance = 1e-6;
  std::vector<std::pair<double, double>> x_box;  // for a closed-form psi; defaults to [-1/2, 1/2]^2
};

struct SolitonSolution {
  SolitonProblem problem;
  SolutionClass cls = SolutionClass::Torsion;
  PsiField psi;
  Expr h3, h4;
  std::array<Expr, 2> w;
  NField n;
  PointList points;
  SolitonReport report;
  GeometrySource source() const;
  // Expression file text (h-block via psi when closed form).
  std::string metric_text() const;
};

// Rejection of an assembled solution; carries the full solution and report.
class SolitonRejected : public std::runtime_error {
 public:
  explicit SolitonRejected(SolitonSolution s);
  const SolitonSolution& solution() const { return *sol_; }

 private:
  std::shared_ptr<SolitonSolution> sol_;
};

// Builds h3, h4, w, n from the generating data, assembles the metric and runs
// the residual battery. Throws SpecError for bad input and SolitonRejected
// when an enforced residual exceeds the tolerance.
SolitonSolution assemble(const SolitonProblem& prob, const GeneratingData& gen, SolutionClass cls,
                         const AssembleOptions& opt = {});
// Recomputes the residual battery for a (possibly edited) solution.
SolitonReport residual_battery(const SolitonSolution& s, double tolerance);

// eta_alpha = g_alpha / prime_alpha for diagonal entries (4 per point).
std::vector<std::array<double, 4>> polarizations(const GeometrySource& prime, const GeometrySource& target,
                                                 const PointList& points);

}  // namespace ldalg
