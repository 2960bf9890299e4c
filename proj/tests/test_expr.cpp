#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ldalg/expr.hpp"
#include "testutil.hpp"

using namespace ldalg;

namespace {

const Coords& C22() {
  static const Coords c = Coords::standard(2, 2);
  return c;
}

double ev(const std::string& text, std::map<std::string, double> at) {
  return eval(parse(text, C22()), C22(), at);
}

double ulp_distance(double a, double b) {
  if (a == b) return 0;
  return std::fabs(a - b) / std::nextafter(std::fabs(a), std::numeric_limits<double>::infinity()) /
         std::numeric_limits<double>::epsilon();
}

// Largest magnitude over all subexpression values; the natural scale for
// rounding error of cancelling rewrites such as (p + q) - q -> p.
double magnitude_scale(const Expr& e, std::span<const double> p) {
  double m = std::fabs(eval(e, p));
  if (e.op() == Op::Const || e.op() == Op::Var) return m;
  m = std::max(m, magnitude_scale(e.arg(0), p));
  if (is_binary(e.op())) m = std::max(m, magnitude_scale(e.arg(1), p));
  return m;
}

}  // namespace

TEST(Parse, Literals) {
  Expr e = parse("0", C22());
  EXPECT_TRUE(e.is_const(0.0));
  EXPECT_DOUBLE_EQ(parse("2.5e-1", C22()).value(), 0.25);
  EXPECT_DOUBLE_EQ(parse(".5", C22()).value(), 0.5);
}

TEST(Parse, GrammarShape) {
  Expr e = parse("y3^2 + sin(x1)*x2", C22());
  ASSERT_EQ(e.op(), Op::Add);
  ASSERT_EQ(e.arg(0).op(), Op::Pow);
  EXPECT_EQ(e.arg(0).arg(0).var_index(), 2);
  EXPECT_TRUE(e.arg(0).arg(1).is_const(2));
  ASSERT_EQ(e.arg(1).op(), Op::Mul);
  EXPECT_EQ(e.arg(1).arg(0).op(), Op::Sin);
  EXPECT_EQ(e.arg(1).arg(1).var_index(), 1);
}

TEST(Parse, Precedence) {
  // ^ is right associative and binds tighter than unary minus.
  Expr p = parse("x1^x2^y3", C22());
  ASSERT_EQ(p.op(), Op::Pow);
  EXPECT_EQ(p.arg(1).op(), Op::Pow);
  Expr n = parse("-x1^2", C22());
  ASSERT_EQ(n.op(), Op::Neg);
  EXPECT_EQ(n.arg(0).op(), Op::Pow);
  Expr s = parse("x1 - x2 - y3", C22());
  ASSERT_EQ(s.op(), Op::Sub);
  EXPECT_EQ(s.arg(0).op(), Op::Sub);
  Expr d = parse("x1 / x2 * y3", C22());
  ASSERT_EQ(d.op(), Op::Mul);
  EXPECT_EQ(d.arg(0).op(), Op::Div);
  EXPECT_DOUBLE_EQ(ev("-2^2", {}), -4.0);
  EXPECT_DOUBLE_EQ(ev("2^-1", {}), 0.5);
}

TEST(Parse, Errors) {
  try {
    parse("x1 + * x2", C22());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  try {
    parse("x1 + z9", C22());
    FAIL();
  } catch (const UnknownIdentifier& e) {
    EXPECT_EQ(e.name(), "z9");
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(parse("foo(x1)", C22()), UnknownIdentifier);
  EXPECT_THROW(parse("(x1", C22()), ParseError);
  EXPECT_THROW(parse("x1)", C22()), ParseError);
  EXPECT_THROW(parse("1e", C22()), ParseError);
  EXPECT_THROW(parse("", C22()), ParseError);
}

TEST(Parse, Aliases) {
  Coords c = Coords::standard(1, 1);
  c.add_alias("r", 0);
  Expr e = parse("r*y2", c);
  EXPECT_EQ(print(e, c), "x1*y2");
  EXPECT_THROW(c.add_alias("y2", 0), SpecError);
}

TEST(Eval, Examples) {
  EXPECT_DOUBLE_EQ(ev("exp(y3)/(1+x1^2)", {{"x1", 0}, {"y3", 0}}), 1.0);
  EXPECT_DOUBLE_EQ(ev("x1*x2", {{"x1", 2}, {"x2", 3}}), 6.0);
  EXPECT_DOUBLE_EQ(ev("sqrt(abs(y4))", {{"y4", -4}}), 2.0);
  EXPECT_DOUBLE_EQ(ev("tanh(0) + cos(0)", {}), 1.0);
}

TEST(Eval, DomainErrors) {
  EXPECT_THROW(ev("ln(x1)", {{"x1", 0}}), DomainError);
  EXPECT_THROW(ev("ln(x1)", {{"x1", -1}}), DomainError);
  EXPECT_THROW(ev("sqrt(x1)", {{"x1", -1e-300}}), DomainError);
  EXPECT_THROW(ev("1/x1", {{"x1", 0}}), DomainError);
  EXPECT_THROW(ev("x1^(-1)", {{"x1", 0}}), DomainError);
  EXPECT_THROW(ev("x1^0.5", {{"x1", -2}}), DomainError);
  EXPECT_THROW(ev("exp(x1)", {{"x1", 1000}}), DomainError);
  EXPECT_DOUBLE_EQ(ev("x1^3", {{"x1", -2}}), -8.0);
  EXPECT_DOUBLE_EQ(ev("x1^0", {{"x1", 0}}), 1.0);
}

TEST(Eval, MissingCoordinate) {
  EXPECT_THROW(ev("x1 + y3", {{"x1", 1}}), MissingCoordinate);
  EXPECT_THROW(Point::from_map(C22(), {{"x1", 1}}), MissingCoordinate);
  EXPECT_THROW(Point::from_map(C22(), {{"q", 1}}), std::invalid_argument);
  EXPECT_THROW(Point({1.0, std::nan("")}), DomainError);
  Point p = Point::from_map(C22(), {{"x1", 1}, {"x2", 2}, {"y3", 3}, {"y4", 4}});
  EXPECT_DOUBLE_EQ(eval(parse("x1+x2*y3-y4", C22()), p), 3.0);
}

TEST(Diff, Examples) {
  Expr d = diff(parse("x1^2", C22()), 0);
  EXPECT_DOUBLE_EQ(eval(d, C22(), {{"x1", 3}}), 6.0);
  Expr h = simplify(diff(diff(parse("(y3^2+y4^2)/2", C22()), 2), 2));
  EXPECT_TRUE(h.is_const(1.0)) << print(h, C22());
  Expr e = parse("exp(2*y3)", C22());
  Expr de = diff(e, 2);
  const double exact = eval(de, C22(), {{"y3", 0.5}});
  EXPECT_NEAR(exact, 2 * std::exp(1.0), 1e-14);
  auto f = [&](const std::vector<double>& p) { return eval(e, p); };
  const double fd = testutil::central_diff(f, {0, 0, 0.5, 0}, 2, 1e-5);
  EXPECT_LT(std::fabs(fd - exact) / exact, 1e-7);
}

TEST(Diff, ZeroCases) {
  EXPECT_TRUE(diff(parse("7", C22()), 0).is_const(0));
  EXPECT_TRUE(diff(parse("x2", C22()), 0).is_const(0));
  EXPECT_TRUE(diff(parse("sin(x2)*exp(y3)", C22()), 0).is_const(0));
  EXPECT_TRUE(diff(parse("x1", C22()), 0).is_const(1));
}

TEST(Diff, AllRulesAgainstFiniteDifferences) {
  const char* cases[] = {"sin(x1)*cos(x2)", "exp(x1*x2)", "ln(2+x1^2)", "sqrt(3+y3)", "abs(x1-3)",
                         "tanh(x1*y4)", "x1/(2+x2)", "(1+x1^2)^y3", "2^x1", "-(x1*x1)", "x1^-2",
                         "(2+x1)^x2"};
  const std::vector<double> p = {0.7, -0.4, 0.3, 1.1};
  for (const char* text : cases) {
    Expr e = parse(text, C22());
    auto f = [&](const std::vector<double>& q) { return eval(e, q); };
    for (int v = 0; v < 4; ++v) {
      const double exact = eval(diff(e, v), p);
      const double fd = testutil::central_diff(f, p, v, 1e-5);
      EXPECT_NEAR(exact, fd, 1e-8 * std::max(1.0, std::fabs(exact))) << text << " d/d" << C22().name(v);
    }
  }
}

TEST(Property, DiffMatchesFiniteDifference) {
  auto g = testutil::rng(11);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Expr e = testutil::smooth_expr(g, 4, 4);
    auto p = testutil::random_point(g, 4);
    auto f = [&](const std::vector<double>& q) { return eval(e, q); };
    for (int v = 0; v < 4; ++v) {
      const double exact = eval(diff(e, v), p);
      // Richardson-extrapolated central difference; error O(h^4).
      const double h = 1e-3;
      const double d1 = testutil::central_diff(f, p, v, h);
      const double d2 = testutil::central_diff(f, p, v, h / 2);
      const double fd = (4 * d2 - d1) / 3;
      const double scale = std::max({1.0, std::fabs(exact), std::fabs(eval(e, p))});
      EXPECT_LT(std::fabs(exact - fd) / scale, 1e-6) << print(e, C22());
      ++checked;
    }
  }
  EXPECT_EQ(checked, 1200);
}

TEST(Property, DiffLinearity) {
  auto g = testutil::rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Expr a = testutil::smooth_expr(g, 4, 3);
    Expr b = testutil::smooth_expr(g, 4, 3);
    Expr sum = Expr::make_binary(Op::Add, a, b);
    for (int k = 0; k < 100; ++k) {
      auto p = testutil::random_point(g, 4);
      const int v = k % 4;
      EXPECT_NEAR(eval(diff(sum, v), p), eval(diff(a, v), p) + eval(diff(b, v), p), 1e-12);
    }
  }
}

TEST(Property, MixedPartialsCommute) {
  auto g = testutil::rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Expr e = testutil::smooth_expr(g, 4, 4);
    auto p = testutil::random_point(g, 4);
    const int u = trial % 4, v = (trial / 4) % 4;
    const double uv = eval(diff(diff(e, u), v), p);
    const double vu = eval(diff(diff(e, v), u), p);
    EXPECT_LE(std::fabs(uv - vu), 1e-9 * std::max(1.0, std::fabs(uv))) << print(e, C22());
  }
}

TEST(Simplify, Examples) {
  EXPECT_EQ(print(simplify(parse("0*sin(x1)+y3", C22())), C22()), "y3");
  EXPECT_EQ(print(simplify(parse("x1^1", C22())), C22()), "x1");
  EXPECT_EQ(print(simplify(parse("2*3+x2-x2", C22())), C22()), "6");
  EXPECT_EQ(print(simplify(parse("--x1", C22())), C22()), "x1");
  EXPECT_EQ(print(simplify(parse("x1 - x1", C22())), C22()), "0");
  EXPECT_EQ(print(simplify(parse("x1^0 + 0/x2", C22())), C22()), "1");
  EXPECT_EQ(print(simplify(parse("(x1 - y3) + y3", C22())), C22()), "x1");
  EXPECT_EQ(print(simplify(parse("sin(0) + 1*x2", C22())), C22()), "x2");
}

TEST(Simplify, KeepsUndefinedFolds) {
  // Folding would hide a domain error, so these stay symbolic.
  Expr e = simplify(parse("1/0", C22()));
  EXPECT_EQ(e.op(), Op::Div);
  EXPECT_THROW(eval(e, std::vector<double>(4)), DomainError);
  EXPECT_EQ(simplify(parse("ln(0)", C22())).op(), Op::Ln);
}

TEST(Property, SimplifyPreservesValueAndIsIdempotent) {
  auto g = testutil::rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    Expr e = testutil::smooth_expr(g, 4, 5);
    Expr s = simplify(e);
    EXPECT_TRUE(structurally_equal(simplify(s), s)) << print(e, C22());
    for (int k = 0; k < 5; ++k) {
      auto p = testutil::random_point(g, 4);
      const double a = eval(e, p), b = eval(s, p);
      const double tol = 4 * std::numeric_limits<double>::epsilon() * magnitude_scale(e, p);
      EXPECT_LE(std::fabs(a - b), tol) << print(e, C22()) << " ulps=" << ulp_distance(a, b);
    }
  }
  // Rewrites without cancellation are exact.
  Expr e = parse("(x1*1 + 0)^1 * --x2 - (y3 - y3)", C22());
  std::vector<double> p = {0.3, 0.7, 0.1, 0};
  EXPECT_EQ(eval(e, p), eval(simplify(e), p));
}

TEST(Property, PrintRoundTrip) {
  auto g = testutil::rng(15);
  for (int trial = 0; trial < 2000; ++trial) {
    Expr e = testutil::any_expr(g, 4, 5);
    std::string text = print(e, C22());
    Expr back = parse(text, C22());
    ASSERT_TRUE(structurally_equal(back, e)) << text << " vs " << print(back, C22());
    Expr d = diff(testutil::smooth_expr(g, 4, 3), trial % 4);
    ASSERT_TRUE(structurally_equal(parse(print(d, C22()), C22()), d)) << print(d, C22());
    Expr s = simplify(e);
    ASSERT_TRUE(structurally_equal(parse(print(s, C22()), C22()), s)) << print(s, C22());
  }
}

TEST(Print, Readable) {
  EXPECT_EQ(print(parse("y3^2 + sin(x1)*x2", C22()), C22()), "y3^2 + sin(x1)*x2");
  EXPECT_EQ(print(parse("-x1^2", C22()), C22()), "-x1^2");
  EXPECT_EQ(print(parse("x1 - (x2 - y3)", C22()), C22()), "x1 - (x2 - y3)");
  EXPECT_EQ(print(parse("(x1^x2)^y3", C22()), C22()), "(x1^x2)^y3");
  EXPECT_EQ(print(Expr::constant(-2) * Expr::var(0), C22()), "(-2)*x1");
  EXPECT_EQ(print(Expr::constant(0.1), C22()), "0.1");
}

TEST(Expr, DependsOn) {
  Expr e = parse("sin(x1)*y4", C22());
  EXPECT_TRUE(depends_on(e, 0));
  EXPECT_FALSE(depends_on(e, 1));
  EXPECT_TRUE(depends_on_range(e, 2, 4));
  EXPECT_FALSE(depends_on_range(e, 1, 3));
}
