#include "ldalg/jet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace ldalg {

Jet Jet::constant(int dim, double c, int order) {
  Jet j;
  j.dim = dim;
  j.order = order;
  j.v = c;
  return j;
}

Jet Jet::variable(int dim, int i, double x, int order) {
  Jet j = constant(dim, x, order);
  j.d[i] = 1.0;
  return j;
}

bool Jet::is_zero() const {
  if (v != 0.0) return false;
  if (order >= 1)
    for (int i = 0; i < dim; ++i)
      if (d[i] != 0.0) return false;
  if (order >= 2)
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < dim; ++k)
        if (hess(i, k) != 0.0) return false;
  return true;
}

namespace {

int common_dim(const Jet& a, const Jet& b) { return std::max(a.dim, b.dim); }

}  // namespace

Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  r += b;
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r = a;
  r -= b;
  return r;
}

Jet& operator+=(Jet& a, const Jet& b) {
  axpy(a, 1.0, b);
  return a;
}

Jet& operator-=(Jet& a, const Jet& b) {
  axpy(a, -1.0, b);
  return a;
}

void axpy(Jet& a, double s, const Jet& b) {
  a.dim = common_dim(a, b);
  a.order = std::min(a.order, b.order);
  a.v += s * b.v;
  if (a.order >= 1)
    for (int i = 0; i < a.dim; ++i) a.d[i] += s * b.d[i];
  if (a.order >= 2)
    for (int i = 0; i < a.dim; ++i)
      for (int k = 0; k < a.dim; ++k) a.hess(i, k) += s * b.hess(i, k);
}

void fma_acc(Jet& a, const Jet& b, const Jet& c) {
  a.dim = std::max(a.dim, common_dim(b, c));
  a.order = std::min({a.order, b.order, c.order});
  const int n = a.dim;
  if (a.order >= 2) {
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        a.hess(i, k) += b.hess(i, k) * c.v + b.v * c.hess(i, k) + b.d[i] * c.d[k] + b.d[k] * c.d[i];
  }
  if (a.order >= 1)
    for (int i = 0; i < n; ++i) a.d[i] += b.d[i] * c.v + b.v * c.d[i];
  a.v += b.v * c.v;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r = Jet::constant(common_dim(a, b), 0.0, std::min(a.order, b.order));
  fma_acc(r, a, b);
  return r;
}

Jet operator*(double s, const Jet& a) {
  Jet r = Jet::constant(a.dim, 0.0, a.order);
  axpy(r, s, a);
  return r;
}

Jet operator+(const Jet& a, double s) {
  Jet r = a;
  r.v += s;
  return r;
}

Jet operator-(const Jet& a) { return -1.0 * a; }

Jet chain(const Jet& u, double f0, double f1, double f2) {
  Jet r = Jet::constant(u.dim, f0, u.order);
  if (r.order >= 1)
    for (int i = 0; i < u.dim; ++i) r.d[i] = f1 * u.d[i];
  if (r.order >= 2)
    for (int i = 0; i < u.dim; ++i)
      for (int k = 0; k < u.dim; ++k) r.hess(i, k) = f1 * u.hess(i, k) + f2 * u.d[i] * u.d[k];
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b.v == 0.0) throw DomainError("division by zero");
  const double x = 1.0 / b.v;
  return a * chain(b, x, -x * x, 2 * x * x * x);
}

Jet exp(const Jet& u) {
  const double e = std::exp(u.v);
  return chain(u, e, e, e);
}

Jet log(const Jet& u) {
  if (!(u.v > 0)) throw DomainError("ln of non-positive value");
  return chain(u, std::log(u.v), 1.0 / u.v, -1.0 / (u.v * u.v));
}

Jet sqrt(const Jet& u) {
  if (u.v < 0) throw DomainError("sqrt of negative value");
  const double s = std::sqrt(u.v);
  if (u.order == 0) return chain(u, s, 0, 0);
  if (s == 0.0) throw DomainError("sqrt is not differentiable at 0");
  return chain(u, s, 0.5 / s, -0.25 / (s * u.v));
}

Jet pow(const Jet& u, double p) {
  const double x = u.v;
  if (x == 0.0 && p < 0) throw DomainError("zero raised to a negative power");
  if (x < 0 && p != std::trunc(p)) throw DomainError("non-integer power of a negative base");
  const double f0 = std::pow(x, p);
  const double f1 = p == 0 ? 0.0 : p * std::pow(x, p - 1);
  const double f2 = (p == 0 || p == 1) ? 0.0 : p * (p - 1) * std::pow(x, p - 2);
  return chain(u, f0, u.order >= 1 ? f1 : 0.0, u.order >= 2 ? f2 : 0.0);
}

Jet partial(const Jet& f, int i) {
  if (f.order < 1) throw std::logic_error("partial of an order-0 jet");
  Jet r = Jet::constant(f.dim, f.d[i], f.order - 1);
  if (r.order >= 1)
    for (int k = 0; k < f.dim; ++k) r.d[k] = f.hess(i, k);
  return r;
}

Jet truncate(const Jet& f, int order) {
  Jet r = f;
  r.order = std::min(f.order, order);
  return r;
}

namespace {

void check_finite(const Jet& j, Op op) {
  bool ok = std::isfinite(j.v);
  if (j.order >= 1)
    for (int i = 0; i < j.dim; ++i) ok = ok && std::isfinite(j.d[i]);
  if (j.order >= 2)
    for (int i = 0; i < j.dim; ++i)
      for (int k = 0; k < j.dim; ++k) ok = ok && std::isfinite(j.hess(i, k));
  if (!ok) throw DomainError("non-finite result in " + std::string(op_name(op)));
}

std::optional<double> constant_value(const Expr& e) {
  if (e.op() == Op::Const) return e.value();
  if (e.op() == Op::Neg && e.arg(0).op() == Op::Const) return -e.arg(0).value();
  return std::nullopt;
}

Jet jet_rec(const Expr& e, std::span<const double> p, int order) {
  const int dim = static_cast<int>(p.size());
  switch (e.op()) {
    case Op::Const: return Jet::constant(dim, e.value(), order);
    case Op::Var:
      if (e.var_index() >= dim) throw MissingCoordinate("#" + std::to_string(e.var_index()));
      return Jet::variable(dim, e.var_index(), p[e.var_index()], order);
    default: break;
  }
  Jet r;
  if (is_unary(e.op())) {
    Jet u = jet_rec(e.arg(0), p, order);
    const double x = u.v;
    switch (e.op()) {
      case Op::Neg: r = -u; break;
      case Op::Sin: r = chain(u, std::sin(x), std::cos(x), -std::sin(x)); break;
      case Op::Cos: r = chain(u, std::cos(x), -std::sin(x), -std::cos(x)); break;
      case Op::Exp: r = exp(u); break;
      case Op::Ln: r = log(u); break;
      case Op::Sqrt: r = sqrt(u); break;
      case Op::Abs: {
        if (x == 0.0 && u.order >= 1) throw DomainError("abs is not differentiable at 0");
        const double s = x < 0 ? -1.0 : 1.0;
        r = chain(u, std::fabs(x), s, 0.0);
        break;
      }
      case Op::Tanh: {
        const double t = std::tanh(x);
        r = chain(u, t, 1 - t * t, -2 * t * (1 - t * t));
        break;
      }
      default: throw std::logic_error("jet_eval: unhandled unary op");
    }
  } else {
    Jet a = jet_rec(e.arg(0), p, order);
    if (e.op() == Op::Pow) {
      if (auto c = constant_value(e.arg(1))) {
        r = pow(a, *c);
      } else {
        Jet b = jet_rec(e.arg(1), p, order);
        if (!(a.v > 0)) throw DomainError("variable exponent needs a positive base");
        r = exp(b * log(a));
      }
    } else {
      Jet b = jet_rec(e.arg(1), p, order);
      switch (e.op()) {
        case Op::Add: r = a + b; break;
        case Op::Sub: r = a - b; break;
        case Op::Mul: r = a * b; break;
        case Op::Div: r = a / b; break;
        default: throw std::logic_error("jet_eval: unhandled binary op");
      }
    }
  }
  check_finite(r, e.op());
  return r;
}

}  // namespace

Jet jet_eval(const Expr& e, std::span<const double> point, int order) {
  if (static_cast<int>(point.size()) > kMaxDim) throw DimensionError("jet dimension exceeds 8");
  if (auto c = constant_value(e)) return Jet::constant(static_cast<int>(point.size()), *c, order);
  return jet_rec(e, point, order);
}

JetMatrix matmul(const JetMatrix& a, const JetMatrix& b, int n) {
  const int dim = a.empty() ? 0 : a[0].dim;
  JetMatrix c(n * n, Jet::constant(dim, 0.0, 2));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) fma_acc(c[i * n + j], a[i * n + k], b[k * n + j]);
  return c;
}

JetMatrix inverse(const JetMatrix& a, int n) {
  Eigen::MatrixXd m(n, n);
  int order = 2, dim = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m(i, j) = a[i * n + j].v;
      order = std::min(order, a[i * n + j].order);
      dim = std::max(dim, a[i * n + j].dim);
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s(n - 1) == 0.0 || s(0) / s(n - 1) > 1e12)
    throw DegeneracyError("matrix is singular or ill-conditioned (condition > 1e12)");
  Eigen::MatrixXd inv = m.inverse();
  JetMatrix x(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x[i * n + j] = Jet::constant(dim, inv(i, j), order);
  // Newton steps X <- X(2I - AX); each doubles the number of correct orders.
  for (int it = 0; it < order; ++it) {
    JetMatrix ax = matmul(a, x, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet& e = ax[i * n + j];
        e = -e;
        if (i == j) e.v += 2.0;
      }
    x = matmul(x, ax, n);
  }
  return x;
}

}  // namespace ldalg
