#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ldalg/errors.hpp"
#include "solitonutil.hpp"

using namespace ldalg;
using testutil::ex;

namespace {

PointList box_points(int count, unsigned seed, std::vector<std::pair<double, double>> box) {
  std::mt19937_64 rng(seed);
  PointList pts;
  for (int k = 0; k < count; ++k) {
    std::vector<double> p;
    for (auto [lo, hi] : box) p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
    pts.push_back(p);
  }
  return pts;
}

GeometrySource diagonal_source(const std::string& g1, const std::string& g2, const std::string& h3,
                               const std::string& h4, const std::vector<std::string>& N = {}) {
  DMetric g(2);
  g.set_h(0, 0, ex(g1));
  g.set_h(1, 1, ex(g2));
  g.set_v(0, 0, ex(h3));
  g.set_v(1, 1, ex(h4));
  NConnection n(2, 2);
  for (std::size_t k = 0; k < N.size(); ++k) n.coeffs[k] = ex(N[k]);
  return symbolic_source(LieAlgebroid::trivial(2), n, g);
}

// rho = diag(1, 1 + x1/10); [X1, X2] = X2 / (10 + x1).
LieAlgebroid anchored() {
  LieAlgebroid alg(2, 2);
  alg.set_rho(0, 0, Expr::constant(1.0));
  alg.set_rho(1, 1, ex("1 + x1/10"));
  alg.set_C(1, 0, 1, ex("1 / (10 + x1)"));
  return alg;
}

double max_grid_error(const HSolution& s, const Expr& exact) {
  double e = 0.0;
  for (std::size_t q = 0; q < s.grid.total(); ++q) {
    const auto p = s.grid.point(q);
    e = std::max(e, std::fabs(s.psi[q] - eval(exact, std::vector<double>{p[0], p[1], 0, 0})));
  }
  return e;
}

}  // namespace

TEST(SolitonProblem, ValidatesShapeAndSigns) {
  SolitonProblem p;
  p.alg = LieAlgebroid::trivial(3);
  EXPECT_THROW(p.validate(), SpecError);
  p.alg = LieAlgebroid::trivial(2);
  p.eps = {1, 0, 1, 1};
  EXPECT_THROW(p.validate(), SpecError);
  p.eps = {1, -1, 1, -1};
  EXPECT_NO_THROW(p.validate());
}

TEST(SolitonProblem, ClassifiesBySignOfLambda) {
  SolitonProblem p;
  p.lambda = 0;
  EXPECT_EQ(p.type(), SolitonType::Steady);
  p.lambda = 0.5;
  EXPECT_EQ(p.type(), SolitonType::Shrinking);
  p.lambda = -2;
  EXPECT_EQ(p.type(), SolitonType::Expanding);
}

TEST(SolitonResidual, FlatSteadyIsZero) {
  const auto src = diagonal_source("1", "1", "1", "1");
  const auto pts = box_points(20, 1, {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
  const auto r = soliton_residual(src, Expr::constant(3.0), 0.0, pts);
  EXPECT_EQ(r.max(), 0.0);
}

TEST(SolitonResidual, SphereTimesSphereIsEinsteinWithLambdaOne) {
  const auto src = diagonal_source("1", "sin(x1)^2", "1", "sin(y3)^2");
  const auto pts = box_points(30, 2, {{0.5, 2.5}, {0, 6}, {0.5, 2.5}, {0, 6}});
  const auto r = soliton_residual(src, Expr::constant(0.0), 1.0, pts);
  EXPECT_LT(r.max(), 1e-6);
  EXPECT_GT(soliton_residual(src, Expr::constant(0.0), 0.5, pts).max(), 0.1);
}

TEST(SolitonResidual, LinearPotentialMatchesFrameConstants) {
  const auto src = diagonal_source("1", "1", "1", "1");
  const auto pts = box_points(10, 3, {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
  const std::array<double, 4> k{0, 0, 3, 2};
  const auto r = soliton_residual(src, ex("3*y3 + 2*y4"), 0.0, pts, k);
  EXPECT_LT(r.max(), 1e-14);
  const std::array<double, 4> wrong{0, 0, 3, 1};
  EXPECT_NEAR(soliton_residual(src, ex("3*y3 + 2*y4"), 0.0, pts, wrong).potential, 1.0, 1e-14);
}

TEST(SolitonResidual, HessianOfPotentialEntersTheResidual) {
  // Flat metric, kappa = (x1^2 + x2^2 + y3^2 + y4^2) lambda / 2 is a Gaussian soliton.
  const auto src = diagonal_source("1", "1", "1", "1");
  const auto pts = box_points(10, 4, {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
  EXPECT_LT(soliton_residual(src, ex("0.35*(x1^2 + x2^2 + y3^2 + y4^2)"), 0.7, pts).max(), 1e-13);
}

TEST(ComponentResiduals, FlatSteadyAllZero) {
  const auto src = diagonal_source("1", "1", "1", "1");
  const auto r = component_residuals(src, box_points(10, 5, {{-1, 1}, {-1, 1}, {-1, 1}, {0, 1}}), 0.0, true);
  EXPECT_EQ(r.max(), 0.0);
  EXPECT_EQ(r.two_route, 0.0);
}

TEST(ComponentResiduals, RejectsAnsatzViolations) {
  const auto pts = box_points(3, 6, {{-1, 1}, {-1, 1}, {-1, 1}, {0.1, 1}});
  EXPECT_THROW(component_residuals(diagonal_source("1", "1", "1", "1 + y4^2"), pts, 0.0), SpecError);
  EXPECT_THROW(component_residuals(diagonal_source("1", "1 + y3^2", "1", "1"), pts, 0.0), SpecError);
  DMetric g = DMetric::identity(2);
  g.set_v(0, 1, ex("x1/10"));
  const auto off = symbolic_source(LieAlgebroid::trivial(2), NConnection(2, 2), g);
  EXPECT_THROW(component_residuals(off, pts, 0.0), SpecError);
}

TEST(ComponentResiduals, PrintedRowsThreeAgreeWithPipelineForGenericData) {
  // eq1b to eq3b agree with the full canonical Ricci without solving anything.
  const auto src = diagonal_source("exp(x1*x2/3)", "2*exp(x1*x2/3)", "1 + x1*y3/5 + y3^2/7",
                                   "exp(2*y3)*(1 + x1/10)^2/4 + x2*y3/3", {"x2*y3 + 0.1", "x1*y3/3", "0", "0"});
  const auto r = component_residuals(src, box_points(10, 7, {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {0, 1}}), 1.0, true);
  EXPECT_LT(r.two_route, 1e-12);
  EXPECT_GT(r.eq2b, 1e-3);
}

TEST(ComponentResiduals, EqFourCorrectedMatchesPipelinePrintedDoesNot) {
  const auto src = diagonal_source("1", "1", "1", "exp(2*y3)*(1 + x1/10)^2/4", {"0", "0", "y3^2 + x2*y3", "0"});
  const auto r = component_residuals(src, box_points(10, 8, {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {0, 1}}), 0.0, true);
  EXPECT_LT(r.two_route, 1e-12);
  EXPECT_GT(r.eq4b, 0.1);
  EXPECT_GT(r.eq4b_printed_vs_pipeline, 0.1);
}

TEST(HEquation, QuadraticBoundaryIsReproduced) {
  const double lambda = 0.7;
  HEquation eq{lambda, 1, 1, HForm::Printed, std::nullopt};
  GridSpec g{{{-1, 1}, {-0.5, 1.5}}, {17, 21}, Quadrature::Trapezoid};
  const Expr exact = ex("0.35*(x1^2 + x2^2)");
  const auto s = solve_h_equation(eq, LieAlgebroid::trivial(2), g, exact);
  EXPECT_LT(max_grid_error(s, exact), 1e-8);
  EXPECT_LT(s.residual, 1e-8);
}

TEST(HEquation, HarmonicBoundaryIsReproduced) {
  HEquation eq{0.0, 1, 1, HForm::Printed, std::nullopt};
  GridSpec g{{{0, 1}, {0, 1}}, {15, 15}, Quadrature::Trapezoid};
  const auto s = solve_h_equation(eq, LieAlgebroid::trivial(2), g, ex("x1*x2"));
  EXPECT_LT(max_grid_error(s, ex("x1*x2")), 1e-8);
}

TEST(HEquation, NegativeSignatureBothAxes) {
  HEquation eq{0.7, -1, -1, HForm::Printed, std::nullopt};
  GridSpec g{{{-1, 1}, {-1, 1}}, {11, 11}, Quadrature::Trapezoid};
  const Expr exact = ex("-0.35*(x1^2 + x2^2)");
  EXPECT_LT(max_grid_error(solve_h_equation(eq, LieAlgebroid::trivial(2), g, exact), exact), 1e-8);
}

TEST(HEquation, AnchoredManufacturedSolutionConvergesSecondOrder) {
  const LieAlgebroid alg = anchored();
  const Expr psi = ex("sin(x1) * cos(x2) / 2");
  // X1 X1 psi + X2 X2 psi with X2 = (1 + x1/10) d2.
  const Expr src = simplify(diff(diff(psi, 0), 0) + ex("(1 + x1/10)^2") * diff(diff(psi, 1), 1));
  HEquation eq{0.0, 1, 1, HForm::Printed, src};
  double err[2];
  int k = 0;
  for (int res : {17, 33}) {
    GridSpec g{{{0, 1}, {0, 1}}, {res, res}, Quadrature::Trapezoid};
    const auto s = solve_h_equation(eq, alg, g, psi);
    EXPECT_LT(s.residual, 1e-7);
    err[k++] = max_grid_error(s, psi);
  }
  EXPECT_LT(err[1], 1e-4);
  EXPECT_GT(err[0] / err[1], 3.5);
  EXPECT_LT(h_equation_residual(eq, alg, psi, box_points(10, 9, {{0, 1}, {0, 1}, {0, 0}, {0, 0}})), 1e-12);
}

TEST(HEquation, LiouvilleDiskSolution) {
  const auto s = testutil::disk_solution(64);
  EXPECT_LT(s.residual, 1e-10);
  EXPECT_LE(s.iterations, 10);
  EXPECT_LT(max_grid_error(s, ex(testutil::disk_psi())), 1e-4);
  HEquation eq{1.0, 1, 1, HForm::Liouville, std::nullopt};
  EXPECT_LT(h_equation_residual(eq, LieAlgebroid::trivial(2), ex(testutil::disk_psi()),
                                box_points(10, 10, {{-0.6, 0.6}, {-0.6, 0.6}, {0, 0}, {0, 0}})),
            1e-12);
}

TEST(HEquation, HyperbolicNeedsSuppliedPsi) {
  HEquation eq{0.5, 1, -1, HForm::Printed, std::nullopt};
  GridSpec g{{{0, 1}, {0, 1}}, {9, 9}, Quadrature::Trapezoid};
  EXPECT_THROW(solve_h_equation(eq, LieAlgebroid::trivial(2), g, ex("0")), SpecError);
  const auto pts = box_points(10, 11, {{0, 1}, {0, 1}, {0, 0}, {0, 0}});
  EXPECT_LT(h_equation_residual(eq, LieAlgebroid::trivial(2), ex("0.25*(x1^2 - x2^2) + x1*x2"), pts), 1e-13);
  EXPECT_GT(h_equation_residual(eq, LieAlgebroid::trivial(2), ex("0.25*(x1^2 + x2^2)"), pts), 0.9);
}

TEST(HEquation, DivergentNewtonIsNumericError) {
  // Exponential nonlinearity with the destabilising sign and a huge boundary.
  HEquation eq{-50.0, 1, 1, HForm::Liouville, std::nullopt};
  GridSpec g{{{0, 1}, {0, 1}}, {9, 9}, Quadrature::Trapezoid};
  EXPECT_THROW(solve_h_equation(eq, LieAlgebroid::trivial(2), g, ex("30 + 40*x1")), NumericError);
}

TEST(HSolutionGrid, JetsOnlyAtNodes) {
  const auto s = std::make_shared<HSolution>(testutil::disk_solution(16));
  PsiField f;
  f.grid = s;
  const double x = s->grid.coord(0, 5), y = s->grid.coord(1, 7);
  const std::vector<double> on{x, y, 0.3, 0.0}, off{x + 1e-3, y, 0.3, 0.0};
  const Jet j = f.jet(on);
  EXPECT_EQ(j.dim, 4);
  EXPECT_EQ(j.d[2], 0.0);
  EXPECT_THROW(f.jet(off), SpecError);
}

TEST(VData, ExponentialGeneratingFunction) {
  const double lambda = 2.0;
  const auto v = generate_v_data(ex("exp(y3)"), lambda, 1, 1, Expr::constant(0.0));
  for (double y : {-0.7, 0.0, 1.3}) {
    const std::vector<double> p{0.2, -0.4, y, 0.0};
    EXPECT_NEAR(eval(v.h4, p), std::exp(2 * y) / (4 * lambda), 1e-14);
    EXPECT_NEAR(eval(v.h3, p), 1 / lambda, 1e-14);
  }
}

TEST(VData, LinearGeneratingFunction) {
  const double lambda = 3.0;
  const auto v = generate_v_data(ex("2*sqrt(3)*y3"), lambda, 1, 1, Expr::constant(0.0));
  for (double y : {0.3, 1.0, 2.5}) {
    const std::vector<double> p{0.1, 0.2, y, 0.0};
    EXPECT_NEAR(eval(v.h4, p), y * y, 1e-12);
    EXPECT_NEAR(eval(v.h3, p), 1 / (lambda * y * y), 1e-12);
  }
}

TEST(VData, SteadyIsRejected) {
  EXPECT_THROW(generate_v_data(ex("exp(y3)"), 0.0, 1, 1, Expr::constant(0.0)), SpecError);
}

TEST(VData, PlugBackIntoGeneratingEquation) {
  const double lambda = -0.8;
  const Expr Phi = ex("exp(y3 + sin(x1)/3) * (2 + cos(y3)/4)");
  const auto v = generate_v_data(Phi, lambda, 1, -1, ex("1 + x2^2"));
  const auto pts = box_points(50, 12, {{-1, 1}, {-1, 1}, {-1, 1}, {0, 0}});
  double worst = 0.0;
  for (const auto& p : pts) {
    const Jet h3 = jet_eval(v.h3, p), h4 = jet_eval(v.h4, p);
    // phi = ln |h4* / sqrt|h3 h4||
    const Jet q = partial(h4, 2) / sqrt(h3 * h4 * (h3.v * h4.v < 0 ? -1.0 : 1.0));
    const Jet phi = log(q.v < 0 ? -q : q);
    worst = std::max(worst, std::fabs(phi.d[2] * h4.d[2] - 2 * h3.v * h4.v * lambda));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(WData, IndependentOfXGivesZero) {
  const auto w = generate_w(ex("exp(2*y3)"), LieAlgebroid::trivial(2));
  EXPECT_TRUE(w[0].is_const(0.0));
  EXPECT_TRUE(w[1].is_const(0.0));
}

TEST(WData, StandardExample) {
  const auto w = generate_w(ex("exp(y3) * (1 + x1/10)"), LieAlgebroid::trivial(2));
  for (const auto& p : box_points(20, 13, {{-1, 1}, {-1, 1}, {-1, 1}, {0, 0}})) {
    EXPECT_NEAR(eval(w[0], p), 1 / (10 + p[0]), 1e-15);
    EXPECT_EQ(eval(w[1], p), 0.0);
  }
}

TEST(WData, PlugBackIntoAlgebraicEquation) {
  const double lambda = 1.5;
  const Expr Phi = ex("exp(y3 * (1 + x2^2/4)) * (2 + sin(x1))");
  const LieAlgebroid alg = anchored();
  const auto v = generate_v_data(Phi, lambda, 1, 1, Expr::constant(0.0));
  const auto w = generate_w(Phi, alg);
  double worst = 0.0;
  for (const auto& p : box_points(30, 14, {{-1, 1}, {-1, 1}, {-1, 1}, {0, 0}})) {
    const Jet h3 = jet_eval(v.h3, p), h4 = jet_eval(v.h4, p);
    const Jet phi = log(partial(h4, 2) / sqrt(h3 * h4));
    for (int a = 0; a < 2; ++a) {
      double xa = 0.0;
      for (int i = 0; i < 2; ++i) xa += eval(alg.rho(i, a), p) * phi.d[i];
      const double alpha = h4.d[2] * xa, beta = h4.d[2] * phi.d[2];
      worst = std::max(worst, std::fabs(beta * eval(w[a], p) - alpha));
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(WData, ScaleInvariant) {
  const Expr Phi = ex("exp(y3 * x2) * (3 + x1)");
  const auto w1 = generate_w(Phi, LieAlgebroid::trivial(2));
  const auto w2 = generate_w(simplify(7.5 * Phi), LieAlgebroid::trivial(2));
  for (const auto& p : box_points(20, 15, {{-1, 1}, {0.5, 1}, {-1, 1}, {0, 0}}))
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(eval(w1[a], p), eval(w2[a], p), 1e-14 * std::max(1.0, std::fabs(eval(w1[a], p))));
}

TEST(WData, VanishingStarDerivativeIsNumericError) {
  const PointList pts{{0.1, 0.2, 0.3, 0.0}};
  EXPECT_THROW(generate_w(ex("2 + x1"), LieAlgebroid::trivial(2), pts), NumericError);
}

TEST(NField, NoIntegralWithoutSecondFunction) {
  NField n(ex("1"), ex("exp(2*y3)/4"), {ex("x1*x2"), ex("x2")}, {Expr::constant(0.0), Expr::constant(0.0)}, 0.0);
  EXPECT_FALSE(n.has_integral());
  const std::vector<double> p{0.3, -0.2, 0.4, 0.0};
  EXPECT_NEAR(n.jet(0, p).v, -0.06, 1e-15);
  EXPECT_NEAR(n.jet(1, p).d[1], 1.0, 1e-15);
}

TEST(NField, ClosedFormAntiderivativeWithXDependence) {
  // h3 = 1, h4 = e^{2 y3} (1 + x1/10)^2 / 4: integrand 8 e^{-3t} (1 + x1/10)^-3.
  NField n(ex("1"), ex("exp(2*y3) * (1 + x1/10)^2 / 4"), {Expr::constant(0.0), Expr::constant(0.0)},
           {Expr::constant(1.0), Expr::constant(0.0)}, 0.0);
  for (const auto& p : box_points(10, 16, {{-1, 1}, {-1, 1}, {-1, 1}, {0, 0}})) {
    const double u = 1 + p[0] / 10, e = (8.0 / 3.0) * (1 - std::exp(-3 * p[2]));
    const Jet I = n.antiderivative(p);
    EXPECT_NEAR(I.v, e * std::pow(u, -3), 1e-8);
    EXPECT_NEAR(I.d[0], -0.3 * e * std::pow(u, -4), 1e-8);
    EXPECT_NEAR(I.hess(0, 0), 0.12 * e * std::pow(u, -5), 1e-8);
    EXPECT_NEAR(I.d[1], 0.0, 1e-12);
    EXPECT_NEAR(I.d[2], 8 * std::exp(-3 * p[2]) * std::pow(u, -3), 1e-12);
  }
}

TEST(NField, PlugBackIntoEqFour) {
  const double lambda = 1.3;
  const auto v = generate_v_data(ex("exp(y3 + x1*y3/4) * (2 + sin(x2))"), lambda, 1, 1, Expr::constant(0.0));
  NField n(v.h3, v.h4, {ex("x1"), ex("0")}, {ex("1 + x2^2"), ex("cos(x1)")}, -0.5);
  for (const auto& p : box_points(20, 17, {{-1, 1}, {-1, 1}, {-0.5, 1}, {0, 0}})) {
    const Jet h3 = jet_eval(v.h3, p), h4 = jet_eval(v.h4, p);
    const double gamma = 1.5 * h4.d[2] / h4.v - h3.d[2] / h3.v;
    for (int b = 0; b < 2; ++b) {
      const Jet j = n.jet(b, p);
      EXPECT_LT(std::fabs(j.hess(2, 2) + gamma * j.d[2]), 1e-7);
    }
  }
}

TEST(NField, CachedLinesReproduceFreshValues) {
  const Expr h3 = ex("1 + x1^2"), h4 = ex("2 + sin(y3) + x2/5");
  NField a(h3, h4, {ex("0"), ex("0")}, {ex("1"), ex("1")}, 0.0);
  NField b(h3, h4, {ex("0"), ex("0")}, {ex("1"), ex("1")}, 0.0);
  for (double y : {0.2, 0.9, 0.5, 0.9, -0.4}) a.antiderivative(std::vector<double>{0.3, 0.1, y, 0.0});
  const std::vector<double> p{0.3, 0.1, 0.7, 0.0};
  EXPECT_NEAR(a.antiderivative(p).v, b.antiderivative(p).v, 1e-10);
  EXPECT_EQ(a.antiderivative(p).v, a.antiderivative(p).v);
}

TEST(NField, SingularIntegrandIsNumericError) {
  NField n(ex("1"), ex("y3"), {ex("0"), ex("0")}, {ex("1"), ex("0")}, -1.0);
  EXPECT_THROW(n.antiderivative(std::vector<double>{0.0, 0.0, 1.0, 0.0}), NumericError);
}

TEST(Assemble, LeviCivitaClassPassesEveryResidual) {
  auto c = testutil::standard_case();
  const auto s = assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt);
  EXPECT_TRUE(s.report.pass());
  for (const char* k : {"eq1b", "eq2b", "eq3b", "eq4b", "pipeline_R33", "pipeline_R44", "two_route", "lccondb_w_star",
                        "lccondb_h4_shift", "lccondb_w_curl", "lccondb_n_star", "lccondb_n_curl", "distortion_norm"})
    EXPECT_LT(s.report.value(k), 1e-6) << k;
  EXPECT_LT(s.report.value("eq1_discrete"), 1e-8);
}

TEST(Assemble, GeneratedSolutionHasRicciMinusLambdaG) {
  auto c = testutil::standard_case(32);
  const auto s = assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt);
  EXPECT_LT(s.report.value("soliton_residual_negated_lambda"), 1e-6);
  EXPECT_GT(s.report.value("soliton_residual"), 1.0);
}

TEST(Assemble, TorsionClassKeepsComponentsButBreaksLcConditions) {
  auto c = testutil::standard_case(32);
  c.gen.n_potential.reset();
  c.gen.n1 = {ex("x2"), ex("0")};
  c.gen.n2 = {ex("1 + x2/5"), ex("0")};
  const auto s = assemble(c.problem, c.gen, SolutionClass::Torsion, c.opt);
  EXPECT_LT(s.report.value("eq4b"), 1e-6);
  EXPECT_LT(s.report.value("two_route"), 1e-6);
  EXPECT_GT(s.report.value("lccondb_n_star"), 1e-3);
  EXPECT_GT(s.report.value("distortion_norm"), 1e-3);
  EXPECT_GT(s.report.value("eq4b_as_printed"), 1e-3);
  EXPECT_THROW(assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt), SpecError);
}

TEST(Assemble, LcClassRejectsNonGradientN) {
  auto c = testutil::standard_case(32);
  c.gen.n_potential.reset();
  c.gen.n1 = {ex("0"), ex("x1/5")};
  try {
    assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt);
    FAIL() << "expected rejection";
  } catch (const SolitonRejected& e) {
    EXPECT_GT(e.solution().report.value("lccondb_n_curl"), 0.1);
    EXPECT_FALSE(e.solution().report.find("lccondb_n_curl")->pass());
  }
}

TEST(Assemble, PerturbedH4FailsEqTwo) {
  auto c = testutil::standard_case(32);
  auto s = assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt);
  s.h4 = simplify(s.h4 * ex("1 + y3/100"));
  const auto r = component_residuals(s.source(), s.points, 1.0);
  EXPECT_GT(r.eq2b, 1e-4);
  EXPECT_FALSE(residual_battery(s, 1e-6).pass());
}

TEST(Assemble, ClosedFormPsiAndAnchoredChecks) {
  auto c = testutil::standard_case(32);
  c.gen.psi = PsiField{ex(testutil::disk_psi()), nullptr};
  c.gen.A_tilde = ex("ln(1 + x1/10)");
  const auto s = assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt);
  EXPECT_LT(s.report.value("eq1b"), 1e-12);
  EXPECT_EQ(s.report.find("eq1_discrete"), nullptr);
  c.gen.A_tilde = ex("x1");
  EXPECT_THROW(assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt), SpecError);
}

TEST(Assemble, NegativePhiIsSpecError) {
  auto c = testutil::standard_case(16);
  c.gen.Phi = ex("-exp(y3)");
  EXPECT_THROW(assemble(c.problem, c.gen, SolutionClass::Torsion, c.opt), SpecError);
}

TEST(Assemble, ReportFlagsSignAndAbsoluteLambda) {
  auto c = testutil::standard_case(16);
  c.problem.lambda = -1.0;
  c.gen.psi = PsiField{ex("ln(4 / (1 + x1^2 + x2^2)^2)"), nullptr};
  c.problem.eps = {1, 1, 1, 1};
  try {
    const auto s = assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt);
    bool abs_note = false, sign_note = false;
    for (const auto& n : s.report.notes) {
      abs_note |= n.find("|lambda|") != std::string::npos;
      sign_note |= n.find("eps4") != std::string::npos;
    }
    EXPECT_TRUE(abs_note);
    EXPECT_TRUE(sign_note);
  } catch (const SolitonRejected&) {
    FAIL() << "expanding case rejected";
  }
}

TEST(Assemble, MetricTextNamesEveryBlock) {
  auto c = testutil::standard_case(16);
  c.gen.psi = PsiField{ex(testutil::disk_psi()), nullptr};
  const auto s = assemble(c.problem, c.gen, SolutionClass::LeviCivita, c.opt);
  const auto t = s.metric_text();
  for (const char* k : {"h.1.1 =", "h.2.2 =", "v.1.1 =", "v.2.2 =", "N.1.1 =", "N.2.2 ="})
    EXPECT_NE(t.find(k), std::string::npos) << k;
}

TEST(Polarizations, RatioOfDiagonalEntries) {
  const auto prime = diagonal_source("1", "2", "1", "4");
  const auto target = diagonal_source("3", "2", "exp(y3)", "1");
  const auto eta = polarizations(prime, target, {{0.1, 0.2, 0.0, 0.0}});
  ASSERT_EQ(eta.size(), 1u);
  EXPECT_DOUBLE_EQ(eta[0][0], 3.0);
  EXPECT_DOUBLE_EQ(eta[0][1], 1.0);
  EXPECT_DOUBLE_EQ(eta[0][2], 1.0);
  EXPECT_DOUBLE_EQ(eta[0][3], 0.25);
  EXPECT_THROW(polarizations(diagonal_source("0", "1", "1", "1"), target, {{0.1, 0.2, 0.0, 0.0}}), DegeneracyError);
}
