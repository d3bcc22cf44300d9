#include "gconn/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>

namespace gconn {

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  // Null for leaves; default-constructing Expr here would recurse into Expr().
  Expr a{std::shared_ptr<const Node>{}};
  Expr b{std::shared_ptr<const Node>{}};
};

namespace {

bool is_unary(Op op) {
  switch (op) {
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Pow:
      return true;
    default:
      return false;
  }
}

bool is_binary(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    default: return "";
  }
}

std::optional<Op> function_op(std::string_view name) {
  if (name == "sin") return Op::Sin;
  if (name == "cos") return Op::Cos;
  if (name == "exp") return Op::Exp;
  if (name == "log") return Op::Log;
  if (name == "sqrt") return Op::Sqrt;
  return std::nullopt;
}

// Evaluate a unary function, throwing on domain violations.
double apply_unary(Op op, double x) {
  switch (op) {
    case Op::Neg: return -x;
    case Op::Sin: return std::sin(x);
    case Op::Cos: return std::cos(x);
    case Op::Exp: return std::exp(x);
    case Op::Log:
      if (!(x > 0.0)) {
        throw EvalError(EvalError::Kind::Domain, "log of non-positive value " + format_number(x));
      }
      return std::log(x);
    case Op::Sqrt:
      if (x < 0.0) {
        throw EvalError(EvalError::Kind::Domain, "sqrt of negative value " + format_number(x));
      }
      return std::sqrt(x);
    default:
      throw ExprError("not a unary function");
  }
}

double apply_pow(double base, double exponent) {
  if (base == 0.0 && exponent < 0.0) {
    throw EvalError(EvalError::Kind::Domain, "division by zero in negative power");
  }
  if (base < 0.0 && std::floor(exponent) != exponent) {
    throw EvalError(EvalError::Kind::Domain,
                    "non-integer power " + format_number(exponent) + " of negative value");
  }
  if (exponent == 2.0) return base * base;
  return std::pow(base, exponent);
}

double apply_binary(Op op, double x, double y) {
  switch (op) {
    case Op::Add: return x + y;
    case Op::Sub: return x - y;
    case Op::Mul: return x * y;
    case Op::Div:
      if (y == 0.0) throw EvalError(EvalError::Kind::Domain, "division by zero");
      return x / y;
    default:
      throw ExprError("not a binary operator");
  }
}

// Fold when the result is a finite, domain-valid constant; otherwise keep the
// node so that evaluation reports the singularity.
std::optional<double> try_fold(const std::function<double()>& f) {
  try {
    double v = f();
    if (std::isfinite(v)) return v;
  } catch (const EvalError&) {
  }
  return std::nullopt;
}

}  // namespace

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& what)
    : ExprError(what), kind_(kind), offset_(offset) {}

// ---------------------------------------------------------------------------
// Env

Env::Env(std::initializer_list<std::pair<std::string, double>> init) {
  for (const auto& [name, value] : init) set(name, value);
}

void Env::set(std::string_view name, double value) {
  for (auto& entry : entries_) {
    if (entry.first == name) {
      entry.second = value;
      return;
    }
  }
  entries_.emplace_back(std::string(name), value);
}

std::optional<double> Env::get(std::string_view name) const {
  for (const auto& entry : entries_) {
    if (entry.first == name) return entry.second;
  }
  return std::nullopt;
}

std::string Env::describe() const {
  std::string out;
  for (const auto& [name, value] : entries_) {
    if (!out.empty()) out += ", ";
    out += name + "=" + format_number(value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expr basics

Expr::Expr() {
  static const auto zero = std::make_shared<const Node>();
  node_ = zero;
}

Expr Expr::constant(double value) {
  if (value == 0.0) return Expr();
  auto node = std::make_shared<Node>();
  node->op = Op::Const;
  node->value = value;
  return Expr(std::move(node));
}

Expr Expr::variable(std::string name) {
  auto node = std::make_shared<Node>();
  node->op = Op::Var;
  node->name = std::move(name);
  return Expr(std::move(node));
}

Op Expr::op() const noexcept { return node_->op; }
double Expr::value() const noexcept { return node_->value; }
const std::string& Expr::name() const noexcept { return node_->name; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

Expr Expr::raw_unary(Op op, Expr operand) {
  if (!is_unary(op) || op == Op::Pow) throw ExprError("raw_unary: not a unary op");
  auto node = std::make_shared<Node>();
  node->op = op;
  node->a = std::move(operand);
  return Expr(std::move(node));
}

Expr Expr::raw_binary(Op op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw ExprError("raw_binary: not a binary op");
  auto node = std::make_shared<Node>();
  node->op = op;
  node->a = std::move(lhs);
  node->b = std::move(rhs);
  return Expr(std::move(node));
}

Expr Expr::raw_pow(Expr base, double exponent) {
  auto node = std::make_shared<Node>();
  node->op = Op::Pow;
  node->a = std::move(base);
  node->value = exponent;
  return Expr(std::move(node));
}

bool Expr::equals(const Expr& other) const {
  if (node_ == other.node_) return true;
  const Node& x = *node_;
  const Node& y = *other.node_;
  if (x.op != y.op) return false;
  switch (x.op) {
    case Op::Const: return x.value == y.value;
    case Op::Var: return x.name == y.name;
    case Op::Pow: return x.value == y.value && x.a.equals(y.a);
    default:
      if (is_unary(x.op)) return x.a.equals(y.a);
      return x.a.equals(y.a) && x.b.equals(y.b);
  }
}

namespace {
void collect_vars(const Expr& e, std::set<std::string>& out) {
  switch (e.op()) {
    case Op::Const: return;
    case Op::Var: out.insert(e.name()); return;
    default:
      collect_vars(e.lhs(), out);
      if (is_binary(e.op())) collect_vars(e.rhs(), out);
  }
}
}  // namespace

std::set<std::string> Expr::free_variables() const {
  std::set<std::string> out;
  collect_vars(*this, out);
  return out;
}

bool Expr::depends_on(std::string_view var) const {
  switch (op()) {
    case Op::Const: return false;
    case Op::Var: return name() == var;
    default:
      if (lhs().depends_on(var)) return true;
      return is_binary(op()) && rhs().depends_on(var);
  }
}

std::size_t Expr::size() const {
  switch (op()) {
    case Op::Const:
    case Op::Var: return 1;
    default: return 1 + lhs().size() + (is_binary(op()) ? rhs().size() : 0);
  }
}

double Expr::evaluate(const Env& env) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: {
      auto v = env.get(n.name);
      if (!v) throw EvalError(EvalError::Kind::Unbound, "unbound variable '" + n.name + "'");
      return *v;
    }
    case Op::Pow: return apply_pow(n.a.evaluate(env), n.value);
    case Op::Add: return n.a.evaluate(env) + n.b.evaluate(env);
    case Op::Sub: return n.a.evaluate(env) - n.b.evaluate(env);
    case Op::Mul: return n.a.evaluate(env) * n.b.evaluate(env);
    case Op::Div: return apply_binary(Op::Div, n.a.evaluate(env), n.b.evaluate(env));
    default: return apply_unary(n.op, n.a.evaluate(env));
  }
}

// ---------------------------------------------------------------------------
// Printing

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Neg: return 2;
    case Op::Mul:
    case Op::Div: return 3;
    case Op::Pow: return 4;
    case Op::Const: return e.value() < 0.0 ? 2 : 5;
    default: return 5;
  }
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Const: out += format_number(e.value()); return;
    case Op::Var: out += e.name(); return;
    case Op::Neg:
      out += '-';
      print_wrapped(e.lhs(), precedence(e.lhs()) <= 1, out);
      return;
    case Op::Add:
    case Op::Sub:
      print(e.lhs(), out);
      out += e.op() == Op::Add ? " + " : " - ";
      print_wrapped(e.rhs(), precedence(e.rhs()) <= 1, out);
      return;
    case Op::Mul:
    case Op::Div:
      print_wrapped(e.lhs(), precedence(e.lhs()) < 3, out);
      out += e.op() == Op::Mul ? '*' : '/';
      print_wrapped(e.rhs(), precedence(e.rhs()) <= 3, out);
      return;
    case Op::Pow:
      print_wrapped(e.lhs(), precedence(e.lhs()) < 5, out);
      out += '^';
      out += format_number(e.value());
      return;
    default:
      out += function_name(e.op());
      out += '(';
      print(e.lhs(), out);
      out += ')';
  }
}

}  // namespace

std::string Expr::str() const {
  std::string out;
  print(*this, out);
  return out;
}

// ---------------------------------------------------------------------------
// Folding constructors

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
  if (a.is_zero_constant()) return b;
  if (b.is_zero_constant()) return a;
  return Expr::raw_binary(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
  if (b.is_zero_constant()) return a;
  if (a.is_zero_constant()) return -b;
  if (a.equals(b)) return Expr();
  return Expr::raw_binary(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
  if (a.is_zero_constant() || b.is_zero_constant()) return Expr();
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expr::raw_binary(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    if (auto v = try_fold([&] { return apply_binary(Op::Div, a.value(), b.value()); })) {
      return Expr::constant(*v);
    }
  }
  if (a.is_zero_constant() && !b.is_zero_constant()) return Expr();
  if (b.is_constant(1.0)) return a;
  return Expr::raw_binary(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.value());
  if (a.op() == Op::Neg) return a.lhs();
  return Expr::raw_unary(Op::Neg, a);
}

Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }

namespace {
Expr fold_unary(Op op, const Expr& a) {
  if (a.is_constant()) {
    if (auto v = try_fold([&] { return apply_unary(op, a.value()); })) return Expr::constant(*v);
  }
  return Expr::raw_unary(op, a);
}
}  // namespace

Expr sin(const Expr& a) { return fold_unary(Op::Sin, a); }
Expr cos(const Expr& a) { return fold_unary(Op::Cos, a); }
Expr exp(const Expr& a) { return fold_unary(Op::Exp, a); }
Expr log(const Expr& a) { return fold_unary(Op::Log, a); }
Expr sqrt(const Expr& a) { return fold_unary(Op::Sqrt, a); }

Expr pow(const Expr& base, double exponent) {
  if (exponent == 0.0) return Expr::constant(1.0);
  if (exponent == 1.0) return base;
  if (base.is_constant()) {
    if (auto v = try_fold([&] { return apply_pow(base.value(), exponent); })) {
      return Expr::constant(*v);
    }
  }
  return Expr::raw_pow(base, exponent);
}

Expr sum(const std::vector<Expr>& terms) {
  Expr out;
  for (const auto& t : terms) out = out + t;
  return out;
}

// ---------------------------------------------------------------------------
// Differentiation and substitution

Expr differentiate(const Expr& e, std::string_view var) {
  switch (e.op()) {
    case Op::Const: return Expr();
    case Op::Var: return e.name() == var ? Expr::constant(1.0) : Expr();
    default: break;
  }
  if (!e.depends_on(var)) return Expr();
  const Expr& a = e.lhs();
  switch (e.op()) {
    case Op::Neg: return -differentiate(a, var);
    case Op::Sin: return cos(a) * differentiate(a, var);
    case Op::Cos: return -(sin(a) * differentiate(a, var));
    case Op::Exp: return e * differentiate(a, var);
    case Op::Log: return differentiate(a, var) / a;
    case Op::Sqrt: return differentiate(a, var) / (2.0 * e);
    case Op::Pow:
      return e.value() * pow(a, e.value() - 1.0) * differentiate(a, var);
    case Op::Add: return differentiate(a, var) + differentiate(e.rhs(), var);
    case Op::Sub: return differentiate(a, var) - differentiate(e.rhs(), var);
    case Op::Mul: {
      const Expr& b = e.rhs();
      return differentiate(a, var) * b + a * differentiate(b, var);
    }
    case Op::Div: {
      const Expr& b = e.rhs();
      Expr da = differentiate(a, var);
      Expr db = differentiate(b, var);
      if (db.is_zero_constant()) return da / b;
      return (da * b - a * db) / pow(b, 2.0);
    }
    default:
      throw ExprError("differentiate: unexpected node");
  }
}

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& bindings) {
  switch (e.op()) {
    case Op::Const: return e;
    case Op::Var: {
      auto it = bindings.find(e.name());
      return it == bindings.end() ? e : it->second;
    }
    case Op::Neg: return -substitute(e.lhs(), bindings);
    case Op::Sin: return sin(substitute(e.lhs(), bindings));
    case Op::Cos: return cos(substitute(e.lhs(), bindings));
    case Op::Exp: return exp(substitute(e.lhs(), bindings));
    case Op::Log: return log(substitute(e.lhs(), bindings));
    case Op::Sqrt: return sqrt(substitute(e.lhs(), bindings));
    case Op::Pow: return pow(substitute(e.lhs(), bindings), e.value());
    case Op::Add: return substitute(e.lhs(), bindings) + substitute(e.rhs(), bindings);
    case Op::Sub: return substitute(e.lhs(), bindings) - substitute(e.rhs(), bindings);
    case Op::Mul: return substitute(e.lhs(), bindings) * substitute(e.rhs(), bindings);
    case Op::Div: return substitute(e.lhs(), bindings) / substitute(e.rhs(), bindings);
  }
  throw ExprError("substitute: unexpected node");
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

// Index suffix like "12" in "x12"; no leading zeros, at least one digit.
std::optional<int> index_suffix(std::string_view s) {
  if (s.empty() || s.size() > 6 || s[0] == '0') return std::nullopt;
  int value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

class Parser {
 public:
  Parser(std::string_view text, const VariableScope& scope) : text_(text), scope_(scope) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) syntax("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  std::string_view text_;
  const VariableScope& scope_;
  std::size_t pos_ = 0;

  [[noreturn]] void syntax(const std::string& msg) const {
    throw ParseError(ParseError::Kind::Syntax, pos_,
                     "syntax error at offset " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::strchr(" \t\r\n", text_[pos_]) && text_[pos_] != '\0') ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::raw_binary(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expr::raw_binary(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  static Expr negate(Expr e) {
    if (e.is_constant()) return Expr::constant(-e.value());
    return Expr::raw_unary(Op::Neg, std::move(e));
  }

  Expr term() {
    if (accept('-')) return negate(term());
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::raw_binary(Op::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = Expr::raw_binary(Op::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    if (accept('-')) return negate(factor());
    Expr b = base();
    if (accept('^')) {
      bool negative = accept('-');
      skip_ws();
      double exponent = number();
      return Expr::raw_pow(b, negative ? -exponent : exponent);
    }
    return b;
  }

  double number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
      return pos_ > s;
    };
    bool int_part = digits();
    bool frac_part = false;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      frac_part = digits();
    }
    if (!int_part && !frac_part) {
      pos_ = start;
      syntax("expected number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (!digits()) pos_ = save;
    }
    double value = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
      pos_ = start;
      syntax("malformed number");
    }
    return value;
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  Expr base() {
    char c = peek();
    if (c == '\0') syntax("expected expression");
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      if (!accept(')')) syntax("expected ')'");
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return Expr::constant(number());
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      std::string_view ident = text_.substr(start, pos_ - start);
      if (peek() == '(') {
        auto fn = function_op(ident);
        if (!fn) {
          throw ParseError(ParseError::Kind::UnknownFunction, start,
                           "unknown function '" + std::string(ident) + "' at offset " +
                               std::to_string(start));
        }
        ++pos_;
        Expr arg = expr();
        if (!accept(')')) syntax("expected ')'");
        return Expr::raw_unary(*fn, arg);
      }
      if (!scope_.accepts(ident)) {
        throw ParseError(ParseError::Kind::UnknownVariable, start,
                         "unknown variable '" + std::string(ident) + "' at offset " +
                             std::to_string(start));
      }
      return Expr::variable(std::string(ident));
    }
    syntax("unexpected '" + std::string(1, c) + "'");
  }
};

}  // namespace

bool VariableScope::accepts(std::string_view ident) const {
  if (parameters.count(ident) > 0) return true;
  if (ident == "u") return allow_u;
  if (ident.size() >= 2 && (ident[0] == 'x' || ident[0] == 'y')) {
    auto idx = index_suffix(ident.substr(1));
    if (!idx) return false;
    int limit = ident[0] == 'x' ? n : k;
    return limit < 0 || *idx <= limit;
  }
  return false;
}

Expr parse(std::string_view text, const VariableScope& scope) {
  return Parser(text, scope).run();
}

}  // namespace gconn
