#include "ldalg/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace ldalg {

struct Expr::Node {
  Op op;
  double value = 0.0;
  int var = -1;
  std::vector<Expr> args;
  explicit Node(Op o) : op(o) {}
};

bool is_unary(Op op) { return op >= Op::Neg && op <= Op::Tanh; }
bool is_binary(Op op) { return op >= Op::Add; }

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Neg: return "neg";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Tanh: return "tanh";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    case Op::Const: return "const";
    case Op::Var: return "var";
  }
  return "?";
}

// ---------------------------------------------------------------- Coords, Point

Coords::Coords(std::vector<std::string> names) : names_(std::move(names)) {
  for (int i = 0; i < size(); ++i) {
    if (!lookup_.emplace(names_[i], i).second)
      throw SpecError("duplicate coordinate name '" + names_[i] + "'");
  }
}

Coords Coords::standard(int n, int m) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (int a = 1; a <= m; ++a) names.push_back("y" + std::to_string(n + a));
  return Coords(std::move(names));
}

std::optional<int> Coords::find(std::string_view name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void Coords::add_alias(const std::string& alias, int index) {
  if (index < 0 || index >= size()) throw SpecError("alias '" + alias + "' targets no coordinate");
  if (!lookup_.emplace(alias, index).second)
    throw SpecError("alias '" + alias + "' clashes with an existing name");
}

Point::Point(std::vector<double> values) : v_(std::move(values)) {
  for (double x : v_)
    if (!std::isfinite(x)) throw DomainError("point coordinate is not finite");
}

Point Point::from_map(const Coords& coords, const std::map<std::string, double>& values) {
  std::vector<double> v(coords.size(), 0.0);
  std::vector<bool> seen(coords.size(), false);
  for (const auto& [name, x] : values) {
    auto idx = coords.find(name);
    if (!idx) throw std::invalid_argument("point names undeclared coordinate '" + name + "'");
    v[*idx] = x;
    seen[*idx] = true;
  }
  for (int i = 0; i < coords.size(); ++i)
    if (!seen[i]) throw MissingCoordinate(coords.name(i));
  return Point(std::move(v));
}

// ---------------------------------------------------------------- construction

Expr::Expr() : node_(std::make_shared<const Node>(Op::Const)) {}

Expr Expr::constant(double v) {
  if (!std::isfinite(v)) throw DomainError("non-finite constant");
  if (v < 0) return make_unary(Op::Neg, constant(-v));
  auto n = std::make_shared<Node>(Op::Const);
  n->value = v == 0.0 ? 0.0 : v;  // drops the sign of -0
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::var(int index) {
  auto n = std::make_shared<Node>(Op::Var);
  n->var = index;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::make_unary(Op op, Expr a) {
  auto n = std::make_shared<Node>(op);
  n->args = {std::move(a)};
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::make_binary(Op op, Expr a, Expr b) {
  auto n = std::make_shared<Node>(op);
  n->args = {std::move(a), std::move(b)};
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
int Expr::var_index() const { return node_->var; }
const Expr& Expr::arg(int i) const { return node_->args.at(i); }

std::size_t Expr::node_count() const {
  if (op() == Op::Const || op() == Op::Var) return 1;
  if (is_unary(op())) return 1 + arg(0).node_count();
  return 1 + arg(0).node_count() + arg(1).node_count();
}

namespace {

// Numeric literal value, treating neg(const) as a negative number.
std::optional<double> number(const Expr& e) {
  if (e.op() == Op::Const) return e.value();
  if (e.op() == Op::Neg && e.arg(0).op() == Op::Const) return -e.arg(0).value();
  return std::nullopt;
}

bool is_number(const Expr& e, double v) {
  auto x = number(e);
  return x && *x == v;
}

double apply_unary(Op op, double x) {
  switch (op) {
    case Op::Neg: return -x;
    case Op::Sin: return std::sin(x);
    case Op::Cos: return std::cos(x);
    case Op::Exp: return std::exp(x);
    case Op::Ln:
      if (!(x > 0)) throw DomainError("ln of non-positive value");
      return std::log(x);
    case Op::Sqrt:
      if (x < 0) throw DomainError("sqrt of negative value");
      return std::sqrt(x);
    case Op::Abs: return std::fabs(x);
    case Op::Tanh: return std::tanh(x);
    default: break;
  }
  throw std::logic_error("not a unary op");
}

double apply_pow(double x, double y) {
  if (x == 0.0 && y < 0) throw DomainError("zero raised to a negative power");
  if (x < 0 && y != std::trunc(y)) throw DomainError("non-integer power of a negative base");
  return std::pow(x, y);
}

double apply_binary(Op op, double x, double y) {
  switch (op) {
    case Op::Add: return x + y;
    case Op::Sub: return x - y;
    case Op::Mul: return x * y;
    case Op::Div:
      if (y == 0.0) throw DomainError("division by zero");
      return x / y;
    case Op::Pow: return apply_pow(x, y);
    default: break;
  }
  throw std::logic_error("not a binary op");
}

// Folded numeric result if defined and finite.
std::optional<double> try_fold(auto&& f) {
  try {
    double v = f();
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  auto x = number(a), y = number(b);
  if (x && y) {
    if (auto v = try_fold([&] { return *x + *y; })) return Expr::constant(*v);
  }
  if (x && *x == 0) return b;
  if (y && *y == 0) return a;
  return Expr::make_binary(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  auto x = number(a), y = number(b);
  if (x && y) {
    if (auto v = try_fold([&] { return *x - *y; })) return Expr::constant(*v);
  }
  if (y && *y == 0) return a;
  if (x && *x == 0) return -b;
  return Expr::make_binary(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  auto x = number(a), y = number(b);
  if (x && y) {
    if (auto v = try_fold([&] { return *x * *y; })) return Expr::constant(*v);
  }
  if ((x && *x == 0) || (y && *y == 0)) return Expr::constant(0.0);
  if (x && *x == 1) return b;
  if (y && *y == 1) return a;
  return Expr::make_binary(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  auto x = number(a), y = number(b);
  if (x && y) {
    if (auto v = try_fold([&] { return apply_binary(Op::Div, *x, *y); })) return Expr::constant(*v);
  }
  if (x && *x == 0 && !(y && *y == 0)) return Expr::constant(0.0);
  if (y && *y == 1) return a;
  return Expr::make_binary(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (auto x = number(a)) return Expr::constant(-*x);
  if (a.op() == Op::Neg) return a.arg(0);
  return Expr::make_unary(Op::Neg, a);
}

Expr pow(const Expr& a, const Expr& b) {
  auto x = number(a), y = number(b);
  if (x && y) {
    if (auto v = try_fold([&] { return apply_pow(*x, *y); })) return Expr::constant(*v);
  }
  if (y && *y == 0) return Expr::constant(1.0);
  if (y && *y == 1) return a;
  if (x && *x == 1) return Expr::constant(1.0);
  return Expr::make_binary(Op::Pow, a, b);
}

Expr call(Op fn, const Expr& a) {
  if (fn == Op::Neg) return -a;
  if (auto x = number(a)) {
    if (auto v = try_fold([&] { return apply_unary(fn, *x); })) return Expr::constant(*v);
  }
  return Expr::make_unary(fn, a);
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.same(b)) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Const: return a.value() == b.value();
    case Op::Var: return a.var_index() == b.var_index();
    default: break;
  }
  if (is_unary(a.op())) return structurally_equal(a.arg(0), b.arg(0));
  return structurally_equal(a.arg(0), b.arg(0)) && structurally_equal(a.arg(1), b.arg(1));
}

bool depends_on_range(const Expr& e, int lo, int hi) {
  switch (e.op()) {
    case Op::Const: return false;
    case Op::Var: return e.var_index() >= lo && e.var_index() < hi;
    default: break;
  }
  if (is_unary(e.op())) return depends_on_range(e.arg(0), lo, hi);
  return depends_on_range(e.arg(0), lo, hi) || depends_on_range(e.arg(1), lo, hi);
}

bool depends_on(const Expr& e, int var_index) { return depends_on_range(e, var_index, var_index + 1); }

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Coords& coords) : s_(text), coords_(coords) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = Expr::make_binary(Op::Add, e, term());
      else if (accept('-')) e = Expr::make_binary(Op::Sub, e, term());
      else return e;
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (accept('*')) e = Expr::make_binary(Op::Mul, e, factor());
      else if (accept('/')) e = Expr::make_binary(Op::Div, e, factor());
      else return e;
    }
  }

  Expr factor() {
    if (accept('-')) return Expr::make_unary(Op::Neg, factor());
    Expr b = base();
    if (accept('^')) return Expr::make_binary(Op::Pow, b, factor());
    return b;
  }

  Expr base() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  Expr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t k = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, ++k;
      return k;
    };
    std::size_t nd = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) throw ParseError("malformed number", start);
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        (void)save;
        throw ParseError("malformed exponent", pos_);
      }
    }
    std::string lit(s_.substr(start, pos_ - start));
    double v = std::strtod(lit.c_str(), nullptr);
    if (!std::isfinite(v)) throw ParseError("number out of range", start);
    return Expr::constant(v);
  }

  Expr ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    if (peek() == '(') {
      static const std::pair<const char*, Op> fns[] = {
          {"neg", Op::Neg}, {"sin", Op::Sin}, {"cos", Op::Cos},   {"exp", Op::Exp},
          {"ln", Op::Ln},   {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"tanh", Op::Tanh}};
      for (const auto& [fname, op] : fns) {
        if (name == fname) {
          accept('(');
          Expr e = expr();
          if (!accept(')')) throw ParseError("expected ')'", pos_);
          return Expr::make_unary(op, e);
        }
      }
      throw UnknownIdentifier(name, start);
    }
    if (auto idx = coords_.find(name)) return Expr::var(*idx);
    throw UnknownIdentifier(name, start);
  }

  std::string_view s_;
  const Coords& coords_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- printer

std::string format_number(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

void emit(const Expr& e, const Coords& c, std::string& out);

void emit_wrapped(const Expr& e, const Coords& c, std::string& out, bool wrap) {
  if (wrap) out += '(';
  emit(e, c, out);
  if (wrap) out += ')';
}

void emit(const Expr& e, const Coords& c, std::string& out) {
  switch (e.op()) {
    case Op::Const: out += format_number(e.value()); return;
    case Op::Var: out += c.name(e.var_index()); return;
    case Op::Neg: {
      const Expr& a = e.arg(0);
      out += '-';
      // The operand is a factor; anything looser, or a nested minus, gets parentheses.
      emit_wrapped(a, c, out, precedence(a) < 4);
      return;
    }
    default: break;
  }
  if (is_unary(e.op())) {
    out += op_name(e.op());
    out += '(';
    emit(e.arg(0), c, out);
    out += ')';
    return;
  }
  const Expr& l = e.arg(0);
  const Expr& r = e.arg(1);
  const int p = precedence(e);
  switch (e.op()) {
    case Op::Add:
    case Op::Sub:
      emit_wrapped(l, c, out, precedence(l) < 1);
      out += e.op() == Op::Add ? " + " : " - ";
      emit_wrapped(r, c, out, precedence(r) <= p || r.op() == Op::Neg);
      return;
    case Op::Mul:
    case Op::Div:
      emit_wrapped(l, c, out, precedence(l) < p || l.op() == Op::Neg);
      out += e.op() == Op::Mul ? "*" : "/";
      emit_wrapped(r, c, out, precedence(r) <= p || r.op() == Op::Neg);
      return;
    case Op::Pow:
      emit_wrapped(l, c, out, precedence(l) < 5);
      out += '^';
      emit_wrapped(r, c, out, precedence(r) < 4);
      return;
    default: break;
  }
}

}  // namespace

Expr parse(std::string_view text, const Coords& coords) { return Parser(text, coords).run(); }

std::string print(const Expr& e, const Coords& coords) {
  std::string out;
  emit(e, coords, out);
  return out;
}

// ---------------------------------------------------------------- diff

Expr diff(const Expr& e, int v) {
  switch (e.op()) {
    case Op::Const: return Expr::constant(0.0);
    case Op::Var: return Expr::constant(e.var_index() == v ? 1.0 : 0.0);
    default: break;
  }
  const Expr& u = e.arg(0);
  if (is_unary(e.op())) {
    Expr du = diff(u, v);
    if (is_number(du, 0)) return Expr::constant(0.0);
    switch (e.op()) {
      case Op::Neg: return -du;
      case Op::Sin: return call(Op::Cos, u) * du;
      case Op::Cos: return -(call(Op::Sin, u) * du);
      case Op::Exp: return call(Op::Exp, u) * du;
      case Op::Ln: return du / u;
      case Op::Sqrt: return du / (Expr::constant(2.0) * call(Op::Sqrt, u));
      case Op::Abs: return du * u / call(Op::Abs, u);
      case Op::Tanh: return (Expr::constant(1.0) - pow(call(Op::Tanh, u), Expr::constant(2.0))) * du;
      default: break;
    }
  }
  const Expr& w = e.arg(1);
  Expr du = diff(u, v);
  Expr dw = diff(w, v);
  switch (e.op()) {
    case Op::Add: return du + dw;
    case Op::Sub: return du - dw;
    case Op::Mul: return du * w + u * dw;
    case Op::Div:
      if (is_number(dw, 0)) return du / w;
      return (du * w - u * dw) / pow(w, Expr::constant(2.0));
    case Op::Pow: {
      if (is_number(dw, 0)) {
        if (is_number(du, 0)) return Expr::constant(0.0);
        return w * pow(u, w - Expr::constant(1.0)) * du;
      }
      if (is_number(du, 0)) return e * call(Op::Ln, u) * dw;
      return e * (dw * call(Op::Ln, u) + w * du / u);
    }
    default: break;
  }
  throw std::logic_error("diff: unhandled op");
}

// ---------------------------------------------------------------- simplify

Expr simplify(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
    case Op::Var: return e;
    default: break;
  }
  if (is_unary(e.op())) return call(e.op(), simplify(e.arg(0)));
  Expr a = simplify(e.arg(0));
  Expr b = simplify(e.arg(1));
  switch (e.op()) {
    case Op::Add:
      // (p - q) + q -> p and q + (p - q) -> p
      if (a.op() == Op::Sub && structurally_equal(a.arg(1), b)) return a.arg(0);
      if (b.op() == Op::Sub && structurally_equal(b.arg(1), a)) return b.arg(0);
      return a + b;
    case Op::Sub:
      if (structurally_equal(a, b)) return Expr::constant(0.0);
      // (p + q) - q -> p and (p + q) - p -> q
      if (a.op() == Op::Add && structurally_equal(a.arg(1), b)) return a.arg(0);
      if (a.op() == Op::Add && structurally_equal(a.arg(0), b)) return a.arg(1);
      return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return pow(a, b);
    default: break;
  }
  throw std::logic_error("simplify: unhandled op");
}

// ---------------------------------------------------------------- eval

double eval(const Expr& e, std::span<const double> p) {
  double r;
  switch (e.op()) {
    case Op::Const: return e.value();
    case Op::Var:
      if (e.var_index() >= static_cast<int>(p.size()))
        throw MissingCoordinate("#" + std::to_string(e.var_index()));
      return p[e.var_index()];
    default: break;
  }
  if (is_unary(e.op())) r = apply_unary(e.op(), eval(e.arg(0), p));
  else r = apply_binary(e.op(), eval(e.arg(0), p), eval(e.arg(1), p));
  if (!std::isfinite(r)) throw DomainError("non-finite result in " + std::string(op_name(e.op())));
  return r;
}

double eval(const Expr& e, const Point& p) { return eval(e, p.values()); }

double eval(const Expr& e, const Coords& coords, const std::map<std::string, double>& values) {
  std::vector<double> v(coords.size(), 0.0);
  std::vector<bool> seen(coords.size(), false);
  for (const auto& [name, x] : values) {
    if (auto idx = coords.find(name)) {
      v[*idx] = x;
      seen[*idx] = true;
    }
  }
  for (int i = 0; i < coords.size(); ++i)
    if (!seen[i] && depends_on(e, i)) throw MissingCoordinate(coords.name(i));
  return eval(e, v);
}

}  // namespace ldalg
