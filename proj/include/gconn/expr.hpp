#pragma once

// Scalar expression trees over chart variables.
//
// Every coefficient function in the engine (anchor components, connection
// coefficients, structure functions, pseudo-SODE forces, Lagrangians) is an
// Expr. Trees are immutable and share subtrees, so copying is cheap and
// concurrent evaluation is safe.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gconn {

enum class Op : std::uint8_t {
  Const,
  Var,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // base ^ constant exponent
};

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ExprError {
 public:
  enum class Kind { Syntax, UnknownFunction, UnknownVariable };
  ParseError(Kind kind, std::size_t offset, const std::string& what);
  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

class EvalError : public ExprError {
 public:
  enum class Kind { Unbound, Domain };
  EvalError(Kind kind, const std::string& what) : ExprError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Variable bindings. Chart scenarios bind at most a dozen names, so a flat
// vector with linear lookup beats a node-based map.
class Env {
 public:
  Env() = default;
  Env(std::initializer_list<std::pair<std::string, double>> init);

  void set(std::string_view name, double value);
  std::optional<double> get(std::string_view name) const;
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }

  // "x1=0.25, y1=-1"
  std::string describe() const;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

class Expr {
 public:
  Expr();  // the constant 0
  static Expr constant(double value);
  static Expr variable(std::string name);

  Op op() const noexcept;
  // Constant value for Const, exponent for Pow.
  double value() const noexcept;
  const std::string& name() const noexcept;
  // Operand of unary nodes and left operand of binary nodes.
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool is_constant() const noexcept { return op() == Op::Const; }
  bool is_constant(double v) const noexcept { return is_constant() && value() == v; }
  bool is_zero_constant() const noexcept { return is_constant(0.0); }

  // Structural equality.
  bool equals(const Expr& other) const;
  bool same_node(const Expr& other) const noexcept { return node_ == other.node_; }

  std::set<std::string> free_variables() const;
  bool depends_on(std::string_view var) const;
  std::size_t size() const;

  double evaluate(const Env& env) const;
  std::string str() const;

  // Node construction without folding; used by the parser so that parsed
  // trees keep their written shape.
  static Expr raw_unary(Op op, Expr operand);
  static Expr raw_binary(Op op, Expr lhs, Expr rhs);
  static Expr raw_pow(Expr base, double exponent);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Folding constructors: constant arithmetic, 0*f -> 0, 1*f -> f, f+0 -> f,
// f-f -> 0 for structurally equal operands, neg(neg f) -> f.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);
Expr operator/(const Expr& a, double b);

Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);
Expr pow(const Expr& base, double exponent);

// Sum of a list (0 when empty).
Expr sum(const std::vector<Expr>& terms);

// Exact symbolic derivative.
Expr differentiate(const Expr& e, std::string_view var);

// Replace variables by expressions; folds as it rebuilds.
Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& bindings);

// Which identifiers the parser accepts as variables.
struct VariableScope {
  int n = -1;  // x1..xn; negative means any index
  int k = -1;  // y1..yk; negative means any index
  bool allow_u = true;
  std::set<std::string, std::less<>> parameters;

  bool accepts(std::string_view ident) const;
};

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := '-' term | factor (('*'|'/') factor)*
//   factor := '-' factor | base ('^' ['-'] number)?
//   base   := number | ident | ident '(' expr ')' | '(' expr ')'
Expr parse(std::string_view text, const VariableScope& scope = {});

std::string format_number(double v);

}  // namespace gconn
