#include <gtest/gtest.h>

#include <cmath>

#include "ldalg/jet.hpp"
#include "testutil.hpp"

using namespace ldalg;

TEST(Jet, MatchesSymbolicDerivatives) {
  auto g = testutil::rng(11);
  for (int t = 0; t < 150; ++t) {
    const int nv = 3;
    Expr e = testutil::smooth_expr(g, nv, 4);
    auto p = testutil::random_point(g, nv);
    Jet j = jet_eval(e, p, 2);
    const double scale = 1.0 + std::fabs(j.v);
    EXPECT_NEAR(j.v, eval(e, p), 1e-12 * scale);
    for (int i = 0; i < nv; ++i) {
      Expr di = diff(e, i);
      EXPECT_NEAR(j.d[i], eval(di, p), 1e-10 * (1.0 + std::fabs(j.d[i])));
      for (int k = 0; k < nv; ++k)
        EXPECT_NEAR(j.hess(i, k), eval(diff(di, k), p), 1e-9 * (1.0 + std::fabs(j.hess(i, k))));
    }
  }
}

TEST(Jet, OrderPropagatesAsMinimum) {
  std::vector<double> p{0.3, -0.2};
  Jet a = jet_eval(parse("x1*y2", Coords::standard(1, 1)), p, 2);
  Jet b = jet_eval(parse("sin(x1)", Coords::standard(1, 1)), p, 1);
  EXPECT_EQ((a * b).order, 1);
  EXPECT_EQ((a + b).order, 1);
  EXPECT_EQ(partial(a, 0).order, 1);
  EXPECT_DOUBLE_EQ(partial(a, 0).v, -0.2);
  EXPECT_DOUBLE_EQ(partial(a, 0).d[1], 1.0);
}

TEST(Jet, DomainErrors) {
  Coords c = Coords::standard(1, 1);
  std::vector<double> zero{0.0, 0.0};
  EXPECT_THROW(jet_eval(parse("sqrt(x1)", c), zero, 1), DomainError);
  EXPECT_NO_THROW(jet_eval(parse("sqrt(x1)", c), zero, 0));
  EXPECT_THROW(jet_eval(parse("abs(x1)", c), zero, 1), DomainError);
  EXPECT_THROW(jet_eval(parse("ln(x1)", c), zero, 2), DomainError);
  EXPECT_THROW(jet_eval(parse("1/x1", c), zero, 2), DomainError);
  EXPECT_THROW(jet_eval(parse("x1^y2", c), std::vector<double>{-1.0, 0.5}, 2), DomainError);
}

TEST(Jet, InverseProductIsIdentityThroughSecondOrder) {
  auto g = testutil::rng(5);
  const int n = 3, nv = 4;
  for (int t = 0; t < 20; ++t) {
    auto p = testutil::random_point(g, nv);
    JetMatrix a(n * n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        Expr e = testutil::smooth_expr(g, nv, 3);
        if (i == k) e = e + 4.0;
        a[i * n + k] = jet_eval(e, p, 2);
      }
    JetMatrix prod = matmul(a, inverse(a, n), n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const Jet& e = prod[i * n + k];
        EXPECT_NEAR(e.v, i == k ? 1.0 : 0.0, 1e-12);
        for (int x = 0; x < nv; ++x) {
          EXPECT_NEAR(e.d[x], 0.0, 1e-11);
          for (int y = 0; y < nv; ++y) EXPECT_NEAR(e.hess(x, y), 0.0, 1e-10);
        }
      }
  }
}

TEST(Jet, InverseRejectsSingular) {
  JetMatrix a{Jet::constant(2, 1.0), Jet::constant(2, 2.0), Jet::constant(2, 2.0), Jet::constant(2, 4.0)};
  EXPECT_THROW(inverse(a, 2), DegeneracyError);
}
