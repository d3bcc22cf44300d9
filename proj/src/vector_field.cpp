#include "gconn/vector_field.hpp"

#include "gconn/bundle.hpp"

namespace gconn {

VectorFieldE VectorFieldE::zero(int n, int k) {
  return {std::vector<Expr>(n), std::vector<Expr>(k)};
}

Expr VectorFieldE::apply(const Expr& f) const {
  Expr out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!dx[i].is_zero_constant()) out = out + dx[i] * differentiate(f, ChartSpec::x(int(i)));
  }
  for (std::size_t a = 0; a < dy.size(); ++a) {
    if (!dy[a].is_zero_constant()) out = out + dy[a] * differentiate(f, ChartSpec::y(int(a)));
  }
  return out;
}

VectorFieldE lie_bracket(const VectorFieldE& X, const VectorFieldE& Y) {
  VectorFieldE out = VectorFieldE::zero(int(X.dx.size()), int(X.dy.size()));
  for (std::size_t i = 0; i < X.dx.size(); ++i) out.dx[i] = X.apply(Y.dx[i]) - Y.apply(X.dx[i]);
  for (std::size_t a = 0; a < X.dy.size(); ++a) out.dy[a] = X.apply(Y.dy[a]) - Y.apply(X.dy[a]);
  return out;
}

}  // namespace gconn
