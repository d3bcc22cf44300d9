#include "gconn/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gconn {

VariableScope ChartSpec::scope(bool allow_y) const {
  VariableScope s;
  s.n = n;
  s.k = allow_y ? k : 0;
  return s;
}

AnchorSpec AnchorSpec::zero(const ChartSpec& chart) {
  AnchorSpec a;
  a.rho.assign(chart.n, std::vector<Expr>(chart.l));
  return a;
}

Env EPoint::env() const {
  Env env;
  for (std::size_t i = 0; i < x.size(); ++i) env.set(ChartSpec::x(int(i)), x[i]);
  for (std::size_t a = 0; a < y.size(); ++a) env.set(ChartSpec::y(int(a)), y[a]);
  return env;
}

TildeSection TildeSection::zero(int k) { return {Expr(), std::vector<Expr>(k)}; }

TildeSection TildeSection::canonical(int k) {
  TildeSection t{Expr::constant(1.0), {}};
  for (int a = 0; a < k; ++a) t.X.push_back(ChartSpec::yv(a));
  return t;
}

TildeSection SectionE::tilde() const { return {Expr::constant(1.0), sigma}; }
TildeSection SectionEbar::tilde() const { return {Expr(), sigma}; }

std::vector<double> evaluate_all(const std::vector<Expr>& es, const Env& env) {
  std::vector<double> out;
  out.reserve(es.size());
  for (const auto& e : es) out.push_back(e.evaluate(env));
  return out;
}

std::vector<double> AdmissibleCurve::base_at(double u) const { return evaluate_all(cM, Env{{"u", u}}); }
std::vector<double> AdmissibleCurve::fibre_at(double u) const { return evaluate_all(c, Env{{"u", u}}); }

TildeVector canonical_section(const EPoint& e) { return {1.0, e.y}; }

TildeVector theta_map(const EPoint& e, const TildeVector& te) {
  TildeVector out{0.0, te.w};
  for (std::size_t a = 0; a < out.w.size(); ++a) out.w[a] -= te.y0 * e.y[a];
  return out;
}

TangentVector vertical_lift(const EPoint& e, const TildeVector& te) {
  return {std::vector<double>(e.x.size(), 0.0), theta_map(e, te).w};
}

TildeDecomposition tilde_decompose(const TildeSection& X) {
  TildeDecomposition d{X.X0, TildeSection::zero(int(X.X.size()))};
  for (std::size_t a = 0; a < X.X.size(); ++a) {
    d.bar.X[a] = X.X[a] - X.X0 * ChartSpec::yv(int(a));
  }
  return d;
}

TildeSection reassemble(const TildeDecomposition& d) {
  TildeSection out{d.f, d.bar.X};
  for (std::size_t a = 0; a < out.X.size(); ++a) out.X[a] = out.X[a] + d.f * ChartSpec::yv(int(a));
  return out;
}

AdmissibilityReport check_admissible(const AdmissibleCurve& c, const AnchorSpec& anchor,
                                     int nodes, double tol) {
  if (nodes < 2) throw std::invalid_argument("check_admissible needs at least 2 nodes");
  if (anchor.rho.size() != c.cM.size()) throw ConfigError("curve base dimension does not match anchor");
  std::vector<Expr> velocity;
  for (const auto& comp : c.cM) velocity.push_back(differentiate(comp, "u"));

  AdmissibilityReport report;
  report.tolerance = tol;
  report.witness_u = c.a;
  for (int j = 0; j < nodes; ++j) {
    double t = std::cos(std::numbers::pi * j / (nodes - 1));
    double u = 0.5 * (c.a + c.b) - 0.5 * (c.b - c.a) * t;
    try {
      Env at_u{{"u", u}};
      EPoint base{evaluate_all(c.cM, at_u), {}};
      Env at_x = base.env();
      std::vector<double> cv = evaluate_all(c.c, at_u);
      for (std::size_t i = 0; i < anchor.rho.size(); ++i) {
        double rhs = 0.0;
        for (std::size_t a = 0; a < cv.size(); ++a) rhs += anchor.rho[i][a].evaluate(at_x) * cv[a];
        double r = std::abs(velocity[i].evaluate(at_u) - rhs);
        if (std::isnan(r)) r = INFINITY;
        if (r > report.max_residual) {
          report.max_residual = r;
          report.witness_u = u;
        }
      }
    } catch (const EvalError& err) {
      throw EvalError(err.kind(), std::string(err.what()) + " at curve node u=" + format_number(u));
    }
  }
  return report;
}

std::vector<std::string> validate_chart(const ChartSpec& chart, const AnchorSpec& anchor) {
  std::vector<std::string> errors;
  if (chart.n < 1) errors.push_back("n must be at least 1");
  if (chart.k < 1) errors.push_back("k must be at least 1");
  if (chart.l < 1) errors.push_back("l must be at least 1");
  if (chart.anchored_in_E && chart.l != chart.k + 1) {
    errors.push_back("anchored_in_E requires l = k + 1 (got l=" + std::to_string(chart.l) +
                     ", k=" + std::to_string(chart.k) + ")");
  }
  if (int(anchor.rho.size()) != chart.n) {
    errors.push_back("anchor has " + std::to_string(anchor.rho.size()) + " rows, expected n=" +
                     std::to_string(chart.n));
  }
  for (std::size_t i = 0; i < anchor.rho.size(); ++i) {
    if (int(anchor.rho[i].size()) != chart.l) {
      errors.push_back("anchor row " + std::to_string(i + 1) + " has " +
                       std::to_string(anchor.rho[i].size()) + " entries, expected l=" +
                       std::to_string(chart.l));
    }
    for (std::size_t a = 0; a < anchor.rho[i].size(); ++a) {
      for (const auto& v : anchor.rho[i][a].free_variables()) {
        std::string where = " at rho[" + std::to_string(i + 1) + "][" + std::to_string(chart.v_label(int(a))) + "]";
        if (!v.empty() && v[0] == 'y') {
          errors.push_back("anchor depends on fibre variable " + v + where);
        } else if (!chart.scope(false).accepts(v) || v == "u") {
          errors.push_back("anchor depends on variable " + v + " outside x1..x" +
                           std::to_string(chart.n) + where);
        }
      }
    }
  }
  return errors;
}

}  // namespace gconn
