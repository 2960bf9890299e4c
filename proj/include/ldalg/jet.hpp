#pragma once

#include <array>
#include <span>
#include <vector>

#include "ldalg/expr.hpp"

namespace ldalg {

constexpr int kMaxDim = 8;

// Truncated Taylor jet of a scalar field at a point: value, gradient and
// Hessian with respect to the coordinates. `order` says how many of these
// are meaningful; arithmetic propagates the minimum order of the operands.
struct Jet {
  int dim = 0;
  int order = 0;
  double v = 0.0;
  std::array<double, kMaxDim> d{};
  std::array<double, kMaxDim * kMaxDim> h{};

  static Jet constant(int dim, double c, int order = 2);
  static Jet variable(int dim, int i, double x, int order = 2);

  double hess(int i, int j) const { return h[i * kMaxDim + j]; }
  double& hess(int i, int j) { return h[i * kMaxDim + j]; }
  bool is_zero() const;
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator*(double s, const Jet& a);
inline Jet operator*(const Jet& a, double s) { return s * a; }
Jet operator+(const Jet& a, double s);
inline Jet operator+(double s, const Jet& a) { return a + s; }
Jet& operator+=(Jet& a, const Jet& b);
Jet& operator-=(Jet& a, const Jet& b);
// a += s * b without temporaries.
void axpy(Jet& a, double s, const Jet& b);
// a += b * c, truncated to the common order.
void fma_acc(Jet& a, const Jet& b, const Jet& c);

// f(u) given f, f', f'' at u.v.
Jet chain(const Jet& u, double f0, double f1, double f2);
Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sqrt(const Jet& u);
Jet pow(const Jet& u, double p);

// Partial derivative along coordinate i; order drops by one.
Jet partial(const Jet& f, int i);
Jet truncate(const Jet& f, int order);

// Forward-mode evaluation of e with all coordinates active.
Jet jet_eval(const Expr& e, std::span<const double> point, int order = 2);

// Dense square matrices of jets, row-major.
using JetMatrix = std::vector<Jet>;
JetMatrix matmul(const JetMatrix& a, const JetMatrix& b, int n);
// Inverse with exact jet propagation; throws DegeneracyError when the value
// matrix is singular or its condition number exceeds 1e12.
JetMatrix inverse(const JetMatrix& a, int n);

}  // namespace ldalg
