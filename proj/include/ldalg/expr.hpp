#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldalg/errors.hpp"

namespace ldalg {

enum class Op : unsigned char {
  Const, Var,
  Neg, Sin, Cos, Exp, Ln, Sqrt, Abs, Tanh,
  Add, Sub, Mul, Div, Pow,
};

bool is_unary(Op op);
bool is_binary(Op op);
// Function-call spelling of a unary op ("neg", "sin", ...).
std::string_view op_name(Op op);

// Ordered coordinate names. Index i is the position used by Var nodes.
class Coords {
 public:
  Coords() = default;
  explicit Coords(std::vector<std::string> names);
  // x1..xn followed by y(n+1)..y(n+m).
  static Coords standard(int n, int m);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> find(std::string_view name) const;
  // Extra spelling for an existing coordinate; printing keeps the canonical name.
  void add_alias(const std::string& alias, int index);

 private:
  std::vector<std::string> names_;
  std::map<std::string, int, std::less<>> lookup_;
};

// Coordinate values covering exactly the declared coordinates.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> values);
  static Point from_map(const Coords& coords, const std::map<std::string, double>& values);

  int size() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_[i]; }
  double& operator[](int i) { return v_[i]; }
  std::span<const double> values() const { return v_; }

 private:
  std::vector<double> v_;
};

// Immutable expression tree; copies share structure.
class Expr {
 public:
  Expr();  // the zero constant
  static Expr constant(double v);
  static Expr var(int index);
  // Raw node construction, no rewriting.
  static Expr make_unary(Op op, Expr a);
  static Expr make_binary(Op op, Expr a, Expr b);

  Op op() const;
  double value() const;   // Const only
  int var_index() const;  // Var only
  const Expr& arg(int i) const;

  bool is_const() const { return op() == Op::Const; }
  bool is_const(double v) const { return is_const() && value() == v; }
  bool same(const Expr& o) const { return node_ == o.node_; }
  std::size_t node_count() const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Construction helpers with 0/1 folding; used by diff and client code.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);
Expr call(Op fn, const Expr& a);
inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
inline Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }

bool structurally_equal(const Expr& a, const Expr& b);

Expr parse(std::string_view text, const Coords& coords);
std::string print(const Expr& e, const Coords& coords);

Expr diff(const Expr& e, int var_index);
Expr simplify(const Expr& e);

double eval(const Expr& e, std::span<const double> point);
double eval(const Expr& e, const Point& p);
// Named evaluation; throws MissingCoordinate if a used coordinate is absent.
double eval(const Expr& e, const Coords& coords, const std::map<std::string, double>& values);

// True if any Var with index in [lo, hi) occurs in e.
bool depends_on_range(const Expr& e, int lo, int hi);
bool depends_on(const Expr& e, int var_index);

}  // namespace ldalg
