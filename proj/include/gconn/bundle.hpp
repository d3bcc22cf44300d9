#pragma once

// Local-coordinate model of an affine bundle E -> M, its model vector bundle,
// the extended bundle with basis (e_0, e_alpha), and the anchored bundle V.
//
// Indices are 0-based in storage. In anchored mode (V identified with the
// extended bundle) V-index 0 is e_0 and V-index alpha+1 is e_alpha.

#include <stdexcept>
#include <string>
#include <vector>

#include "gconn/expr.hpp"
#include "gconn/sampling.hpp"

namespace gconn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChartSpec {
  int n = 1;  // dim M, coordinates x1..xn
  int k = 1;  // fibre dim of E, coordinates y1..yk
  int l = 1;  // fibre dim of V, components v^a
  bool anchored_in_E = false;

  static std::string x(int i) { return "x" + std::to_string(i + 1); }
  static std::string y(int alpha) { return "y" + std::to_string(alpha + 1); }
  static Expr xv(int i) { return Expr::variable(x(i)); }
  static Expr yv(int alpha) { return Expr::variable(y(alpha)); }

  // Index as written in formulas: 0..k in anchored mode, 1..l otherwise.
  int v_label(int a) const { return anchored_in_E ? a : a + 1; }

  VariableScope scope(bool allow_y = true) const;
};

struct AnchorSpec {
  std::vector<std::vector<Expr>> rho;  // rho[i][a], n x l

  static AnchorSpec zero(const ChartSpec& chart);
};

struct EPoint {
  std::vector<double> x;
  std::vector<double> y;

  Env env() const;
};

struct VPoint {
  std::vector<double> x;
  std::vector<double> v;
};

// Components (y0, w) with respect to (e_0, e_alpha); y0 = lambda(e~).
struct TildeVector {
  double y0 = 0.0;
  std::vector<double> w;
};

struct TangentVector {
  std::vector<double> xdot;
  std::vector<double> ydot;
};

// Section of the pulled-back extended bundle in the basis (e_0, ebar_alpha):
// X = X0 * e_0 + X[alpha] * ebar_alpha, components functions of (x, y).
struct TildeSection {
  Expr X0;
  std::vector<Expr> X;

  static TildeSection zero(int k);
  static TildeSection canonical(int k);  // I = e_0 + y^alpha ebar_alpha
};

struct SectionV {
  std::vector<Expr> s;  // s^a(x)
};

struct SectionE {
  std::vector<Expr> sigma;  // sigma^alpha(x); implicit e_0 coefficient 1
  TildeSection tilde() const;
};

struct SectionEbar {
  std::vector<Expr> sigma;  // sigma-bar^alpha(x)
  TildeSection tilde() const;
};

struct AdmissibleCurve {
  std::vector<Expr> cM;  // c_M^i(u)
  std::vector<Expr> c;   // c^a(u)
  double a = 0.0;
  double b = 1.0;

  std::vector<double> base_at(double u) const;
  std::vector<double> fibre_at(double u) const;
};

TildeVector canonical_section(const EPoint& e);
TildeVector theta_map(const EPoint& e, const TildeVector& te);
TangentVector vertical_lift(const EPoint& e, const TildeVector& te);

struct TildeDecomposition {
  Expr f;
  TildeSection bar;  // bar.X0 is the zero constant
};
TildeDecomposition tilde_decompose(const TildeSection& X);
TildeSection reassemble(const TildeDecomposition& d);

struct AdmissibilityReport {
  double max_residual = 0.0;
  double witness_u = 0.0;
  double tolerance = 1e-9;
  bool pass() const { return max_residual <= tolerance; }
};

// Residual max |dc_M/du - rho(c_M) c| over Chebyshev-Lobatto nodes.
AdmissibilityReport check_admissible(const AdmissibleCurve& c, const AnchorSpec& anchor,
                                     int nodes = 33, double tol = 1e-9);

// Empty when the chart and anchor are consistent.
std::vector<std::string> validate_chart(const ChartSpec& chart, const AnchorSpec& anchor);

// Evaluate a vector of expressions at one point.
std::vector<double> evaluate_all(const std::vector<Expr>& es, const Env& env);

}  // namespace gconn
