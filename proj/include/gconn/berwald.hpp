#pragma once

// The two Berwald-type linearisations of a rho-connection: coefficient tables
// and the covariant derivative D_Z X of sections of the pulled-back extended
// bundle along sections of the prolonged bundle.

#include <string>
#include <vector>

#include "gconn/connection.hpp"
#include "gconn/transport.hpp"
#include "json.hpp"

namespace gconn {

enum class BerwaldVariant { Plain, Hat };

std::string to_string(BerwaldVariant v);
BerwaldVariant parse_variant(std::string_view text);

struct BerwaldTable {
  ChartSpec chart;
  BerwaldVariant variant = BerwaldVariant::Plain;
  // D_{H_a} e_0 = d_h_e0[gamma][a] ebar_gamma
  std::vector<std::vector<Expr>> d_h_e0;
  // Dbar_{H_a} ebar_beta = dbar_h_e[gamma][a][beta] ebar_gamma
  std::vector<std::vector<std::vector<Expr>>> dbar_h_e;
  // D_{V_alpha} e_0 = v_e0_sign * ebar_alpha (0 plain, -1 hat); Dbar_V ebar = 0.
  double v_e0_sign = 0.0;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

BerwaldTable berwald_table(const Connection& conn, BerwaldVariant variant);

// rho1(Z)(F) = z^a (rho^i_a dF/dx^i - Gamma^alpha_a dF/dy^alpha) + W^alpha dF/dy^alpha
Expr prolonged_anchor(const Connection& conn, const AdaptedSection& Z, const Expr& F);

// Leibniz extension of the coefficient table over the basis (e_0, ebar_beta).
TildeSection covariant_D(const Connection& conn, BerwaldVariant variant, const AdaptedSection& Z,
                         const TildeSection& X);
TildeSection covariant_D(const BerwaldTable& table, const Connection& conn, const AdaptedSection& Z,
                         const TildeSection& X);

// Table of an affine connection against its affine split.
ResidualReport verify_affine_reproduction(const Connection& conn, const SampleBox& box, double tol = 1e-12);

struct ParallelismInput {
  SectionV s;          // horizontal generator
  EPoint e;            // start of the horizontal integral curve
  SectionE sigma;      // basic section: initial value of the transported X
  SectionEbar ybar;    // vertical generator
  SectionEbar sigmabar;
  double span = 1.0;
};

// (a) D_{Hs}-parallel sections of pi*E along the integral curve of h(s)
//     against Lie transport, (b) plain variant: basic sigma is parallel along
//     vertical generators, (c) hat variant: I + sigmabar is parallel.
ResidualReport verify_parallelism(const Connection& conn, const ParallelismInput& in, const TransportConfig& cfg,
                                  const SampleBox& box, double tol_symbolic = 1e-12);

}  // namespace gconn
