#pragma once

// Vector fields on the total space E with symbolic components.

#include <vector>

#include "gconn/expr.hpp"

namespace gconn {

struct VectorFieldE {
  std::vector<Expr> dx;  // components along d/dx^i
  std::vector<Expr> dy;  // components along d/dy^alpha

  static VectorFieldE zero(int n, int k);

  // The field acting as a derivation on a function of (x, y).
  Expr apply(const Expr& f) const;
};

// [X, Y]^i = X(Y^i) - Y(X^i), componentwise and exact.
VectorFieldE lie_bracket(const VectorFieldE& X, const VectorFieldE& Y);

}  // namespace gconn
