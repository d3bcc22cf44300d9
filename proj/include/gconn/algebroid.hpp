#pragma once

// Affine Lie algebroid structure on the anchored-in-E chart: prolonged
// brackets, the vertical endomorphism, pseudo-SODEs and their connection,
// Lagrangian pseudo-SODEs, and the bracket formulae for the Berwald
// derivatives.

#include <random>
#include <stdexcept>
#include <vector>

#include "gconn/berwald.hpp"
#include "gconn/connection.hpp"
#include "gconn/transport.hpp"

namespace gconn {

struct AlgebroidSpec {
  ChartSpec chart;  // anchored_in_E, l = k + 1
  AnchorSpec anchor;
  std::vector<std::vector<std::vector<Expr>>> C;  // C[gamma][alpha][beta]
  std::vector<std::vector<Expr>> C0;               // C0[gamma][beta] = C^gamma_{0 beta}

  static AlgebroidSpec abelian(const ChartSpec& chart, const AnchorSpec& anchor);

  // C^gamma_{ab} for V-indices a, b in 0..k (index 0 is e_0).
  Expr structure(int gamma, int a, int b) const;
};

// Residuals of antisymmetry, anchor compatibility and Jacobi on basis
// sections; one entry per axiom instance.
ResidualReport validate_algebroid(const AlgebroidSpec& spec, const SampleBox& box, double tol = 1e-9);

// sum_i C^c_{ab} rho^i_c - (rho^j_a d_j rho^i_b - rho^j_b d_j rho^i_a)
Expr anchor_compat_component(const AlgebroidSpec& spec, int a, int b, int i);

// Component f of the Jacobiator of (e_a, e_b, e_c); defined for any order.
Expr jacobi_component(const AlgebroidSpec& spec, int a, int b, int c, int f);

// Prolonged anchor acting on F: z^a rho^i_a dF/dx^i + Z^alpha dF/dy^alpha.
Expr prolonged_anchor(const AlgebroidSpec& spec, const ProlongedSection& Z, const Expr& F);

// S(Z) = (z^alpha - z^0 y^alpha) V_alpha
ProlongedSection vertical_endomorphism(const ChartSpec& chart, const ProlongedSection& Z);

ProlongedSection prolonged_bracket(const AlgebroidSpec& spec, const ProlongedSection& Z1,
                                   const ProlongedSection& Z2);

struct PseudoSode {
  std::vector<Expr> f;
};

// X_0 + y^alpha X_alpha + f^alpha V_alpha
ProlongedSection pseudo_sode_build(const ChartSpec& chart, const PseudoSode& f);

Connection sode_connection(const AlgebroidSpec& spec, const PseudoSode& f);

// [Gamma, S Z] - S [Gamma, Z]
ProlongedSection d_gamma_S(const AlgebroidSpec& spec, const ProlongedSection& Gamma, const ProlongedSection& Z);

// 1/2 (Z - d_Gamma S(Z) + z^0 Gamma)
ProlongedSection horizontal_projector(const AlgebroidSpec& spec, const PseudoSode& f, const ProlongedSection& Z);

class RegularityError : public std::runtime_error {
 public:
  RegularityError(const std::string& what, Env witness)
      : std::runtime_error(what), witness_(std::move(witness)) {}
  const Env& witness() const noexcept { return witness_; }

 private:
  Env witness_;
};

struct LagrangianSpec {
  Expr L;
};

// g_{ab} = d^2 L / dy^a dy^b
std::vector<std::vector<Expr>> lagrangian_hessian(const ChartSpec& chart, const Expr& L);

// Throws RegularityError if the Hessian is singular or worse conditioned
// than 1e12 at any sample point. The inverse is assembled symbolically from
// cofactors, so f stays differentiable.
PseudoSode lagrangian_sode(const AlgebroidSpec& spec, const LagrangianSpec& L, const SampleBox& box);

// H X = X0 H_0 + X^alpha H_alpha and V X = (X^alpha - X0 y^alpha) V_alpha.
ProlongedSection horizontal_lift(const Connection& conn, const TildeSection& X);
ProlongedSection vertical_lift(const ChartSpec& chart, const TildeSection& X);

TildeSection berwald_direct(const AlgebroidSpec& spec, const Connection& conn, const ProlongedSection& Z,
                            const TildeSection& X, BerwaldVariant variant);

// Smooth test coefficient with seeded random constants; basic means x only.
Expr random_function(const ChartSpec& chart, std::mt19937_64& rng, bool basic);

ResidualReport verify_direct_formulae(const AlgebroidSpec& spec, const Connection& conn, const SampleBox& box,
                                      double tol = 1e-9);

ResidualReport verify_sode_suite(const AlgebroidSpec& spec, const PseudoSode& f, const SampleBox& box,
                                 double tol = 1e-10);

// [H_a, V_alpha] and [H_a, H_b] against their closed forms.
ResidualReport verify_adapted_brackets(const AlgebroidSpec& spec, const Connection& conn, const SampleBox& box,
                                       double tol = 1e-10);

// Integrates x' = rho_0 + rho_mu y^mu, y' = f and checks
// d/dt dL/dy^b = rho^i_b dL/dx^i + (C^g_{mu b} y^mu + C^g_{0b}) dL/dy^g
// with a five-point difference in time.
ResidualReport verify_euler_lagrange(const AlgebroidSpec& spec, const LagrangianSpec& L, const PseudoSode& f,
                                     const EPoint& start, double span, const TransportConfig& cfg,
                                     double tol = 1e-6);

}  // namespace gconn
