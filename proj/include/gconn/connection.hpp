#pragma once

// rho-connections given by coefficients Gamma^alpha_a(x, y), and the
// covariant derivatives they induce on basic sections.

#include <stdexcept>
#include <string>
#include <vector>

#include "gconn/bundle.hpp"
#include "gconn/sampling.hpp"
#include "gconn/vector_field.hpp"

namespace gconn {

class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotAffineError : public ConnectionError {
 public:
  NotAffineError(int alpha, int a, Env witness, const std::string& what)
      : ConnectionError(what), alpha_(alpha), a_(a), witness_(std::move(witness)) {}
  int alpha() const noexcept { return alpha_; }
  int a() const noexcept { return a_; }
  const Env& witness() const noexcept { return witness_; }

 private:
  int alpha_;
  int a_;
  Env witness_;
};

struct Connection {
  ChartSpec chart;
  AnchorSpec anchor;
  std::vector<std::vector<Expr>> gamma;  // gamma[alpha][a], k x l

  static Connection flat(const ChartSpec& chart, const AnchorSpec& anchor);
  std::vector<std::string> validate() const;
};

// Default box used when a caller does not supply one: [-1, 1] in every chart
// variable, 32 points.
SampleBox default_box(const ChartSpec& chart);

// h(x, y, v) = (rho^i_a v^a, -Gamma^alpha_a v^a)
TangentVector h_apply(const Connection& conn, const EPoint& e, const std::vector<double>& v);

// Section of the prolonged bundle in the coordinate basis:
// z^a X_a + Z^alpha V_alpha.
struct ProlongedSection {
  std::vector<Expr> z;
  std::vector<Expr> Z;

  static ProlongedSection zero(const ChartSpec& chart);
  static ProlongedSection basis_X(const ChartSpec& chart, int a);
  static ProlongedSection basis_V(const ChartSpec& chart, int alpha);
};

ProlongedSection operator+(const ProlongedSection& p, const ProlongedSection& q);
ProlongedSection operator-(const ProlongedSection& p, const ProlongedSection& q);
ProlongedSection operator*(const Expr& f, const ProlongedSection& p);

// Same section in the adapted basis: z^a H_a + W^alpha V_alpha,
// W^alpha = Z^alpha + z^a Gamma^alpha_a.
struct AdaptedSection {
  std::vector<Expr> z;
  std::vector<Expr> W;
};

AdaptedSection to_adapted(const Connection& conn, const ProlongedSection& p);
ProlongedSection from_adapted(const Connection& conn, const AdaptedSection& p);

// H_a = X_a - Gamma^alpha_a V_alpha in coordinate components.
std::vector<ProlongedSection> horizontal_basis(const Connection& conn);

// K^alpha = ydot^alpha + Gamma^alpha_a(e) v^a for (v, Q) in the prolongation.
std::vector<double> connection_map_K(const Connection& conn, const EPoint& e,
                                     const std::vector<double>& v, const TangentVector& Q);

struct AffineSplit {
  ChartSpec chart;
  AnchorSpec anchor;
  std::vector<std::vector<Expr>> gamma0;               // [alpha][a], functions of x
  std::vector<std::vector<std::vector<Expr>>> gamma1;  // [alpha][a][beta], functions of x

  // Gamma0 + Gamma1 y as a connection.
  Connection connection() const;
};

bool is_affine(const Connection& conn, const SampleBox& box);
inline bool is_affine(const Connection& conn) { return is_affine(conn, default_box(conn.chart)); }

// Throws NotAffineError carrying the offending (alpha, a) and a witness.
AffineSplit affine_split(const Connection& conn, const SampleBox& box);
inline AffineSplit affine_split(const Connection& conn) {
  return affine_split(conn, default_box(conn.chart));
}

// Value at y = 0 and first y-derivatives at y = 0, without checking
// affineness. For a non-affine connection this is the best linear candidate.
AffineSplit linearisation_at_zero(const Connection& conn);

// rho(s)(f) = rho^i_a s^a df/dx^i
Expr anchor_derivative(const AnchorSpec& anchor, const std::vector<Expr>& s, const Expr& f);

// h(s) and v(X) as vector fields on E.
VectorFieldE horizontal_field(const Connection& conn, const SectionV& s);
VectorFieldE vertical_field(const ChartSpec& chart, const TildeSection& X);

SectionEbar nabla(const AffineSplit& split, const SectionV& s, const SectionE& sigma);
SectionEbar nabla_bar(const AffineSplit& split, const SectionV& s, const SectionEbar& sigma);

// [hs, vX]_v + rho(s)(X0) I for basic X. Requires an affine connection.
TildeSection nabla_tilde(const Connection& conn, const SectionV& s, const TildeSection& X);

// Brackets [hs, v sigma], [hs, v sigmabar] against the coordinate formulas:
// vanishing base part and equal fibre part.
ResidualReport verify_bracket_formulas(const Connection& conn, const SectionV& s, const SectionE& sigma,
                            const SectionEbar& sigmabar, const SampleBox& box, double tol = 1e-12);

// h(e, s) = T sigma(rho s) - [hs, v sigma](e) on the image of sigma, and the
// linear analogue for sigmabar.
ResidualReport verify_horizontal_from_bracket(const Connection& conn, const SectionV& s, const SectionE& sigma,
                           const SectionEbar& sigmabar, const SampleBox& box, double tol = 1e-10);

}  // namespace gconn
