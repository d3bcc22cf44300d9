#include "gconn/algebroid.hpp"

#include <cmath>

namespace gconn {

namespace {

double max_component(const ProlongedSection& p, const Env& env) {
  double m = 0.0;
  for (const auto& c : p.z) m = std::max(m, std::abs(c.evaluate(env)));
  for (const auto& c : p.Z) m = std::max(m, std::abs(c.evaluate(env)));
  return m;
}

double max_component(const TildeSection& t, const Env& env) {
  double m = std::abs(t.X0.evaluate(env));
  for (const auto& c : t.X) m = std::max(m, std::abs(c.evaluate(env)));
  return m;
}

TildeSection operator-(const TildeSection& a, const TildeSection& b) {
  TildeSection out{a.X0 - b.X0, a.X};
  for (std::size_t i = 0; i < out.X.size(); ++i) out.X[i] = out.X[i] - b.X[i];
  return out;
}

TildeSection operator+(const TildeSection& a, const TildeSection& b) {
  TildeSection out{a.X0 + b.X0, a.X};
  for (std::size_t i = 0; i < out.X.size(); ++i) out.X[i] = out.X[i] + b.X[i];
  return out;
}

TildeSection scaled(const Expr& f, const TildeSection& t) {
  TildeSection out{f * t.X0, t.X};
  for (auto& c : out.X) c = f * c;
  return out;
}

// Symbolic determinant by cofactor expansion along the first row.
Expr determinant(const std::vector<std::vector<Expr>>& m) {
  const std::size_t k = m.size();
  if (k == 1) return m[0][0];
  if (k == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Expr det;
  for (std::size_t j = 0; j < k; ++j) {
    if (m[0][j].is_zero_constant()) continue;
    std::vector<std::vector<Expr>> minor;
    for (std::size_t r = 1; r < k; ++r) {
      std::vector<Expr> row;
      for (std::size_t c = 0; c < k; ++c) {
        if (c != j) row.push_back(m[r][c]);
      }
      minor.push_back(std::move(row));
    }
    Expr term = m[0][j] * determinant(minor);
    det = j % 2 == 0 ? det + term : det - term;
  }
  return det;
}

std::vector<std::vector<Expr>> symbolic_inverse(const std::vector<std::vector<Expr>>& m) {
  const std::size_t k = m.size();
  if (k == 1) return {{Expr::constant(1.0) / m[0][0]}};
  Expr det = determinant(m);
  std::vector<std::vector<Expr>> inv(k, std::vector<Expr>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<std::vector<Expr>> minor;
      for (std::size_t r = 0; r < k; ++r) {
        if (r == j) continue;
        std::vector<Expr> row;
        for (std::size_t c = 0; c < k; ++c) {
          if (c != i) row.push_back(m[r][c]);
        }
        minor.push_back(std::move(row));
      }
      Expr cof = determinant(minor);
      inv[i][j] = ((i + j) % 2 == 0 ? cof : -cof) / det;
    }
  }
  return inv;
}

// 1-norm condition number by LU with partial pivoting; infinity if singular.
double condition_number(std::vector<std::vector<double>> a) {
  const std::size_t k = a.size();
  double norm = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < k; ++i) col += std::abs(a[i][j]);
    norm = std::max(norm, col);
  }
  std::vector<std::size_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = i;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < k; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    if (a[p][c] == 0.0 || !std::isfinite(a[p][c])) return INFINITY;
    std::swap(a[p], a[c]);
    std::swap(perm[p], perm[c]);
    for (std::size_t r = c + 1; r < k; ++r) {
      a[r][c] /= a[c][c];
      for (std::size_t j = c + 1; j < k; ++j) a[r][j] -= a[r][c] * a[c][j];
    }
  }
  // Columns of the inverse from unit right-hand sides.
  double inv_norm = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> x(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) x[i] = perm[i] == j ? 1.0 : 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = 0; c < i; ++c) x[i] -= a[i][c] * x[c];
    }
    for (std::size_t i = k; i-- > 0;) {
      for (std::size_t c = i + 1; c < k; ++c) x[i] -= a[i][c] * x[c];
      x[i] /= a[i][i];
    }
    double col = 0.0;
    for (double v : x) col += std::abs(v);
    inv_norm = std::max(inv_norm, col);
  }
  return norm * inv_norm;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  double t = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * t;
}

// Random constant rounded to two decimals so that printed trees stay short.
Expr random_coefficient(std::mt19937_64& rng) {
  return Expr::constant(std::round(uniform(rng, -1.0, 1.0) * 100.0) / 100.0 + 0.0);
}

std::string v_name(const ChartSpec& chart, int a) { return std::to_string(chart.v_label(a)); }

}  // namespace

AlgebroidSpec AlgebroidSpec::abelian(const ChartSpec& chart, const AnchorSpec& anchor) {
  AlgebroidSpec spec;
  spec.chart = chart;
  spec.anchor = anchor;
  spec.C.assign(chart.k, std::vector<std::vector<Expr>>(chart.k, std::vector<Expr>(chart.k)));
  spec.C0.assign(chart.k, std::vector<Expr>(chart.k));
  return spec;
}

Expr AlgebroidSpec::structure(int gamma, int a, int b) const {
  if (a == 0 && b == 0) return Expr();
  if (a == 0) return C0[gamma][b - 1];
  if (b == 0) return -C0[gamma][a - 1];
  return C[gamma][a - 1][b - 1];
}

Expr anchor_compat_component(const AlgebroidSpec& spec, int a, int b, int i) {
  Expr lhs;
  for (int g = 0; g < spec.chart.k; ++g) lhs = lhs + spec.structure(g, a, b) * spec.anchor.rho[i][g + 1];
  Expr rhs;
  for (int j = 0; j < spec.chart.n; ++j) {
    rhs = rhs + spec.anchor.rho[j][a] * differentiate(spec.anchor.rho[i][b], ChartSpec::x(j)) -
          spec.anchor.rho[j][b] * differentiate(spec.anchor.rho[i][a], ChartSpec::x(j));
  }
  return lhs - rhs;
}

Expr jacobi_component(const AlgebroidSpec& spec, int a, int b, int c, int f) {
  const int idx[3] = {a, b, c};
  Expr total;
  for (int r = 0; r < 3; ++r) {
    int p = idx[r], q = idx[(r + 1) % 3], s = idx[(r + 2) % 3];
    // [e_p, [e_q, e_s]]^f
    Expr term;
    for (int i = 0; i < spec.chart.n; ++i) {
      term = term + spec.anchor.rho[i][p] * differentiate(spec.structure(f, q, s), ChartSpec::x(i));
    }
    for (int d = 0; d < spec.chart.k; ++d) {
      term = term + spec.structure(d, q, s) * spec.structure(f, p, d + 1);
    }
    total = total + term;
  }
  return total;
}

ResidualReport validate_algebroid(const AlgebroidSpec& spec, const SampleBox& box, double tol) {
  const int n = spec.chart.n;
  const int k = spec.chart.k;
  const int l = k + 1;
  auto points = box.points();
  ResidualReport report;
  auto record = [&](const std::string& name, const Expr& e) {
    Env witness;
    double r = max_abs(e, points, &witness);
    report.add(name, r, tol, witness);
  };
  for (int g = 0; g < k; ++g) {
    for (int a = 0; a < k; ++a) {
      for (int b = a; b < k; ++b) {
        record("antisymmetry C^" + std::to_string(g + 1) + "_{" + std::to_string(a + 1) + std::to_string(b + 1) + "}",
               spec.C[g][a][b] + spec.C[g][b][a]);
      }
    }
  }
  for (int a = 0; a < l; ++a) {
    for (int b = a + 1; b < l; ++b) {
      for (int i = 0; i < n; ++i) {
        record("anchor compatibility (a=" + std::to_string(a) + ", b=" + std::to_string(b) + ", i=" +
                   std::to_string(i + 1) + ")",
               anchor_compat_component(spec, a, b, i));
      }
    }
  }
  for (int a = 0; a < l; ++a) {
    for (int b = a + 1; b < l; ++b) {
      for (int c = b + 1; c < l; ++c) {
        for (int f = 0; f < k; ++f) {
          record("Jacobi (" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + ") component " +
                     std::to_string(f + 1),
                 jacobi_component(spec, a, b, c, f));
        }
      }
    }
  }
  return report;
}

Expr prolonged_anchor(const AlgebroidSpec& spec, const ProlongedSection& Z, const Expr& F) {
  Expr out;
  for (int i = 0; i < spec.chart.n; ++i) {
    Expr dF = differentiate(F, ChartSpec::x(i));
    if (dF.is_zero_constant()) continue;
    Expr coeff;
    for (int a = 0; a < spec.chart.l; ++a) coeff = coeff + Z.z[a] * spec.anchor.rho[i][a];
    out = out + coeff * dF;
  }
  for (int alpha = 0; alpha < spec.chart.k; ++alpha) {
    if (Z.Z[alpha].is_zero_constant()) continue;
    out = out + Z.Z[alpha] * differentiate(F, ChartSpec::y(alpha));
  }
  return out;
}

ProlongedSection vertical_endomorphism(const ChartSpec& chart, const ProlongedSection& Z) {
  ProlongedSection out = ProlongedSection::zero(chart);
  for (int alpha = 0; alpha < chart.k; ++alpha) out.Z[alpha] = Z.z[alpha + 1] - Z.z[0] * ChartSpec::yv(alpha);
  return out;
}

ProlongedSection prolonged_bracket(const AlgebroidSpec& spec, const ProlongedSection& Z1,
                                   const ProlongedSection& Z2) {
  const int k = spec.chart.k;
  const int l = spec.chart.l;
  ProlongedSection out = ProlongedSection::zero(spec.chart);
  for (int c = 0; c < l; ++c) {
    out.z[c] = prolonged_anchor(spec, Z1, Z2.z[c]) - prolonged_anchor(spec, Z2, Z1.z[c]);
  }
  for (int alpha = 0; alpha < k; ++alpha) {
    out.Z[alpha] = prolonged_anchor(spec, Z1, Z2.Z[alpha]) - prolonged_anchor(spec, Z2, Z1.Z[alpha]);
  }
  // Only [X_a, X_b] = C^gamma_{ab} X_gamma is nonzero among basis brackets.
  for (int a = 0; a < l; ++a) {
    if (Z1.z[a].is_zero_constant()) continue;
    for (int b = 0; b < l; ++b) {
      if (a == b || Z2.z[b].is_zero_constant()) continue;
      for (int g = 0; g < k; ++g) {
        Expr C = spec.structure(g, a, b);
        if (C.is_zero_constant()) continue;
        out.z[g + 1] = out.z[g + 1] + Z1.z[a] * Z2.z[b] * C;
      }
    }
  }
  return out;
}

ProlongedSection pseudo_sode_build(const ChartSpec& chart, const PseudoSode& f) {
  ProlongedSection out = ProlongedSection::basis_X(chart, 0);
  for (int alpha = 0; alpha < chart.k; ++alpha) {
    out.z[alpha + 1] = ChartSpec::yv(alpha);
    out.Z[alpha] = f.f[alpha];
  }
  return out;
}

Connection sode_connection(const AlgebroidSpec& spec, const PseudoSode& f) {
  const int k = spec.chart.k;
  Connection conn = Connection::flat(spec.chart, spec.anchor);
  for (int alpha = 0; alpha < k; ++alpha) {
    for (int beta = 0; beta < k; ++beta) {
      Expr acc = differentiate(f.f[alpha], ChartSpec::y(beta)) + spec.C0[alpha][beta];
      for (int g = 0; g < k; ++g) acc = acc + ChartSpec::yv(g) * spec.C[alpha][g][beta];
      conn.gamma[alpha][beta + 1] = -0.5 * acc;
    }
    Expr g0 = -f.f[alpha];
    for (int beta = 0; beta < k; ++beta) g0 = g0 - ChartSpec::yv(beta) * conn.gamma[alpha][beta + 1];
    conn.gamma[alpha][0] = g0;
  }
  return conn;
}

ProlongedSection d_gamma_S(const AlgebroidSpec& spec, const ProlongedSection& Gamma, const ProlongedSection& Z) {
  return prolonged_bracket(spec, Gamma, vertical_endomorphism(spec.chart, Z)) -
         vertical_endomorphism(spec.chart, prolonged_bracket(spec, Gamma, Z));
}

ProlongedSection horizontal_projector(const AlgebroidSpec& spec, const PseudoSode& f, const ProlongedSection& Z) {
  ProlongedSection Gamma = pseudo_sode_build(spec.chart, f);
  return Expr::constant(0.5) * (Z - d_gamma_S(spec, Gamma, Z) + Z.z[0] * Gamma);
}

std::vector<std::vector<Expr>> lagrangian_hessian(const ChartSpec& chart, const Expr& L) {
  std::vector<std::vector<Expr>> g(chart.k, std::vector<Expr>(chart.k));
  for (int a = 0; a < chart.k; ++a) {
    Expr da = differentiate(L, ChartSpec::y(a));
    for (int b = 0; b < chart.k; ++b) g[a][b] = differentiate(da, ChartSpec::y(b));
  }
  return g;
}

PseudoSode lagrangian_sode(const AlgebroidSpec& spec, const LagrangianSpec& lag, const SampleBox& box) {
  const int n = spec.chart.n;
  const int k = spec.chart.k;
  const Expr& L = lag.L;
  auto g = lagrangian_hessian(spec.chart, L);

  for (const auto& p : box.points()) {
    std::vector<std::vector<double>> gv(k, std::vector<double>(k));
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) gv[a][b] = g[a][b].evaluate(p);
    }
    double cond = condition_number(gv);
    if (!(cond <= 1e12)) {
      throw RegularityError("Lagrangian is not regular: Hessian " +
                                std::string(std::isinf(cond) ? "singular" : "condition " + format_number(cond)) +
                                " at " + p.describe(),
                            p);
    }
  }

  std::vector<Expr> dLdx(n), dLdy(k);
  for (int i = 0; i < n; ++i) dLdx[i] = differentiate(L, ChartSpec::x(i));
  for (int a = 0; a < k; ++a) dLdy[a] = differentiate(L, ChartSpec::y(a));

  std::vector<Expr> rhs(k);
  for (int beta = 0; beta < k; ++beta) {
    Expr acc;
    for (int i = 0; i < n; ++i) acc = acc + spec.anchor.rho[i][beta + 1] * dLdx[i];
    for (int g2 = 0; g2 < k; ++g2) {
      Expr coeff = spec.C0[g2][beta];
      for (int mu = 0; mu < k; ++mu) coeff = coeff + spec.C[g2][mu][beta] * ChartSpec::yv(mu);
      acc = acc + coeff * dLdy[g2];
    }
    for (int i = 0; i < n; ++i) {
      Expr xdot = spec.anchor.rho[i][0];
      for (int mu = 0; mu < k; ++mu) xdot = xdot + spec.anchor.rho[i][mu + 1] * ChartSpec::yv(mu);
      acc = acc - xdot * differentiate(dLdy[beta], ChartSpec::x(i));
    }
    rhs[beta] = acc;
  }

  auto ginv = symbolic_inverse(g);
  PseudoSode out{std::vector<Expr>(k)};
  for (int alpha = 0; alpha < k; ++alpha) {
    Expr acc;
    for (int beta = 0; beta < k; ++beta) acc = acc + ginv[alpha][beta] * rhs[beta];
    out.f[alpha] = acc;
  }
  return out;
}

ProlongedSection horizontal_lift(const Connection& conn, const TildeSection& X) {
  AdaptedSection a{std::vector<Expr>(conn.chart.l), std::vector<Expr>(conn.chart.k)};
  a.z[0] = X.X0;
  for (int alpha = 0; alpha < conn.chart.k; ++alpha) a.z[alpha + 1] = X.X[alpha];
  return from_adapted(conn, a);
}

ProlongedSection vertical_lift(const ChartSpec& chart, const TildeSection& X) {
  ProlongedSection out = ProlongedSection::zero(chart);
  out.Z = tilde_decompose(X).bar.X;
  return out;
}

TildeSection berwald_direct(const AlgebroidSpec& spec, const Connection& conn, const ProlongedSection& Z,
                            const TildeSection& X, BerwaldVariant variant) {
  const int k = spec.chart.k;
  AdaptedSection adapted = to_adapted(conn, Z);
  ProlongedSection PH = from_adapted(conn, {adapted.z, std::vector<Expr>(k)});
  ProlongedSection PV = ProlongedSection::zero(spec.chart);
  PV.Z = adapted.W;

  // [P_H Z, V X]_V as a section of pi*Ebar.
  AdaptedSection b1 = to_adapted(conn, prolonged_bracket(spec, PH, vertical_lift(spec.chart, X)));
  TildeSection out{Expr(), b1.W};

  // [P_V Z, H X]_H read back through j.
  TildeSection lifted = X;
  if (variant == BerwaldVariant::Hat) lifted = tilde_decompose(X).bar;
  AdaptedSection b2 = to_adapted(conn, prolonged_bracket(spec, PV, horizontal_lift(conn, lifted)));
  TildeSection second{b2.z[0], std::vector<Expr>(b2.z.begin() + 1, b2.z.end())};
  out = out + second;

  const ProlongedSection& driver = variant == BerwaldVariant::Plain ? PH : Z;
  Expr df = prolonged_anchor(spec, driver, X.X0);
  return out + scaled(df, TildeSection::canonical(k));
}

Expr random_function(const ChartSpec& chart, std::mt19937_64& rng, bool basic) {
  auto pick_x = [&] { return ChartSpec::xv(int(rng() % unsigned(chart.n))); };
  auto pick_y = [&] { return ChartSpec::yv(int(rng() % unsigned(chart.k))); };
  Expr f = random_coefficient(rng);
  f = f + random_coefficient(rng) * sin(random_coefficient(rng) * pick_x() + 0.5);
  f = f + random_coefficient(rng) * pick_x() * pick_x();
  if (!basic) {
    f = f + random_coefficient(rng) * pick_y();
    f = f + random_coefficient(rng) * cos(pick_x() * pick_y());
    f = f + random_coefficient(rng) * pick_y() * pick_y() * pick_x();
  }
  return f;
}

ResidualReport verify_direct_formulae(const AlgebroidSpec& spec, const Connection& conn, const SampleBox& box,
                                      double tol) {
  const int k = spec.chart.k;
  const int l = spec.chart.l;
  std::mt19937_64 rng(box.seed ^ 0x9e3779b97f4a7c15ull);
  auto points = box.points();
  auto hbasis = horizontal_basis(conn);

  struct Family {
    std::string label;
    std::vector<ProlongedSection> members;
  };
  std::vector<Family> zs{{"H", {}}, {"V", {}}};
  for (int a = 0; a < l; ++a) zs[0].members.push_back(random_function(spec.chart, rng, false) * hbasis[a]);
  for (int alpha = 0; alpha < k; ++alpha) {
    zs[1].members.push_back(random_function(spec.chart, rng, false) * ProlongedSection::basis_V(spec.chart, alpha));
  }

  std::vector<std::pair<std::string, std::vector<TildeSection>>> xs{{"I", {}}, {"ebar", {}}, {"sigma", {}}};
  xs[0].second.push_back(scaled(random_function(spec.chart, rng, false), TildeSection::canonical(k)));
  for (int beta = 0; beta < k; ++beta) {
    TildeSection e = TildeSection::zero(k);
    e.X[beta] = random_function(spec.chart, rng, false);
    xs[1].second.push_back(e);
  }
  TildeSection sigma{Expr::constant(1.0), {}};
  for (int beta = 0; beta < k; ++beta) sigma.X.push_back(random_function(spec.chart, rng, true));
  xs[2].second.push_back(scaled(random_function(spec.chart, rng, false), sigma));

  ResidualReport report;
  for (BerwaldVariant variant : {BerwaldVariant::Plain, BerwaldVariant::Hat}) {
    BerwaldTable table = berwald_table(conn, variant);
    for (const auto& zf : zs) {
      for (const auto& [xlabel, xmembers] : xs) {
        double worst = 0.0;
        Env worst_at;
        for (const auto& Z : zf.members) {
          for (const auto& X : xmembers) {
            TildeSection diff = berwald_direct(spec, conn, Z, X, variant) -
                                covariant_D(table, conn, to_adapted(conn, Z), X);
            Env witness;
            double r = sweep_max(points, [&](const Env& p) { return max_component(diff, p); }, &witness);
            if (r >= worst) {
              worst = r;
              worst_at = witness;
            }
          }
        }
        report.add(to_string(variant) + ": Z~" + zf.label + ", X~" + xlabel, worst, tol, worst_at);
      }
    }
  }
  return report;
}

ResidualReport verify_sode_suite(const AlgebroidSpec& spec, const PseudoSode& f, const SampleBox& box, double tol) {
  const int k = spec.chart.k;
  const int l = spec.chart.l;
  const ChartSpec& chart = spec.chart;
  std::mt19937_64 rng(box.seed ^ 0x5bd1e995ull);
  auto points = box.points();
  ProlongedSection Gamma = pseudo_sode_build(chart, f);
  Connection conn = sode_connection(spec, f);
  auto hbasis = horizontal_basis(conn);

  ResidualReport report;
  auto record = [&](const std::string& name, const ProlongedSection& diff) {
    Env witness;
    double r = sweep_max(points, [&](const Env& p) { return max_component(diff, p); }, &witness);
    report.add(name, r, tol, witness);
  };
  auto random_section = [&] {
    ProlongedSection p = ProlongedSection::zero(chart);
    for (auto& c : p.z) c = random_function(chart, rng, false);
    for (auto& c : p.Z) c = random_function(chart, rng, false);
    return p;
  };
  auto random_tilde = [&] {
    TildeSection t{random_function(chart, rng, false), {}};
    for (int a = 0; a < k; ++a) t.X.push_back(random_function(chart, rng, false));
    return t;
  };

  ProlongedSection Zr = random_section();
  record("S(S(Z)) = 0", vertical_endomorphism(chart, vertical_endomorphism(chart, Zr)));
  record("S(Gamma) = 0", vertical_endomorphism(chart, Gamma));
  {
    Env witness;
    double r = sweep_max(points, [&](const Env& p) { return Gamma.z[0].evaluate(p) - 1.0; }, &witness);
    report.add("<Gamma, X^0> = 1", r, tol, witness);
  }
  TildeSection Xt = random_tilde();
  record("S(H X) = V(theta X)",
         vertical_endomorphism(chart, horizontal_lift(conn, Xt)) - vertical_lift(chart, Xt));

  TildeSection sbar = TildeSection::zero(k);
  for (int a = 0; a < k; ++a) sbar.X[a] = random_function(chart, rng, false);
  ProlongedSection Vs = vertical_lift(chart, sbar);
  ProlongedSection Hs = horizontal_lift(conn, sbar);
  record("d_Gamma S(V sigmabar) = V sigmabar", d_gamma_S(spec, Gamma, Vs) - Vs);
  record("d_Gamma S(H sigmabar) = -H sigmabar", d_gamma_S(spec, Gamma, Hs) + Hs);
  record("d_Gamma S(Gamma) = 0", d_gamma_S(spec, Gamma, Gamma));

  ProlongedSection PZ = horizontal_projector(spec, f, Zr);
  record("P_H(P_H Z) = P_H Z", horizontal_projector(spec, f, PZ) - PZ);
  AdaptedSection adapted = to_adapted(conn, Zr);
  ProlongedSection PV = ProlongedSection::zero(chart);
  PV.Z = adapted.W;
  record("P_H Z + P_V Z = Z", PZ + PV - Zr);
  record("P_H(Gamma) = Gamma", horizontal_projector(spec, f, Gamma) - Gamma);
  for (int a = 0; a < l; ++a) {
    record("P_H(H_" + v_name(chart, a) + ") = H_" + v_name(chart, a),
           horizontal_projector(spec, f, hbasis[a]) - hbasis[a]);
  }
  for (int alpha = 0; alpha < k; ++alpha) {
    record("P_H(V_" + std::to_string(alpha + 1) + ") = 0",
           horizontal_projector(spec, f, ProlongedSection::basis_V(chart, alpha)));
  }
  record("H(I) = Gamma", horizontal_lift(conn, TildeSection::canonical(k)) - Gamma);

  for (int alpha = 0; alpha < k; ++alpha) {
    Expr identity = conn.gamma[alpha][0] + f.f[alpha];
    for (int beta = 0; beta < k; ++beta) identity = identity + ChartSpec::yv(beta) * conn.gamma[alpha][beta + 1];
    Env witness;
    double r = identity.is_zero_constant() ? 0.0 : max_abs(identity, points, &witness);
    report.add("Gamma^" + std::to_string(alpha + 1) + "_0 + y^b Gamma^" + std::to_string(alpha + 1) + "_b + f^" +
                   std::to_string(alpha + 1) + " = 0",
               r, tol, witness);
  }
  return report;
}

ResidualReport verify_adapted_brackets(const AlgebroidSpec& spec, const Connection& conn, const SampleBox& box,
                                       double tol) {
  const int k = spec.chart.k;
  const int l = spec.chart.l;
  auto points = box.points();
  auto H = horizontal_basis(conn);
  ResidualReport report;
  auto record = [&](const std::string& name, const ProlongedSection& diff) {
    Env witness;
    double r = sweep_max(points, [&](const Env& p) { return max_component(diff, p); }, &witness);
    report.add(name, r, tol, witness);
  };
  for (int a = 0; a < l; ++a) {
    for (int alpha = 0; alpha < k; ++alpha) {
      ProlongedSection expected = ProlongedSection::zero(spec.chart);
      for (int d = 0; d < k; ++d) expected.Z[d] = differentiate(conn.gamma[d][a], ChartSpec::y(alpha));
      record("[H_" + v_name(spec.chart, a) + ", V_" + std::to_string(alpha + 1) + "]",
             prolonged_bracket(spec, H[a], ProlongedSection::basis_V(spec.chart, alpha)) - expected);
    }
  }
  for (int a = 0; a < l; ++a) {
    for (int b = a + 1; b < l; ++b) {
      ProlongedSection expected = ProlongedSection::zero(spec.chart);
      for (int d = 0; d < k; ++d) {
        Expr C = spec.structure(d, a, b);
        if (!C.is_zero_constant()) expected = expected + C * H[d + 1];
      }
      for (int g = 0; g < k; ++g) {
        Expr v;
        for (int d = 0; d < k; ++d) v = v + spec.structure(d, a, b) * conn.gamma[g][d + 1];
        v = v + prolonged_anchor(spec, H[b], conn.gamma[g][a]) - prolonged_anchor(spec, H[a], conn.gamma[g][b]);
        expected.Z[g] = expected.Z[g] + v;
      }
      record("[H_" + v_name(spec.chart, a) + ", H_" + v_name(spec.chart, b) + "]",
             prolonged_bracket(spec, H[a], H[b]) - expected);
    }
  }
  return report;
}

ResidualReport verify_euler_lagrange(const AlgebroidSpec& spec, const LagrangianSpec& lag, const PseudoSode& f,
                                     const EPoint& start, double span, const TransportConfig& cfg, double tol) {
  const int n = spec.chart.n;
  const int k = spec.chart.k;
  const Expr& L = lag.L;
  std::vector<Expr> xdot(n);
  for (int i = 0; i < n; ++i) {
    xdot[i] = spec.anchor.rho[i][0];
    for (int mu = 0; mu < k; ++mu) xdot[i] = xdot[i] + spec.anchor.rho[i][mu + 1] * ChartSpec::yv(mu);
  }
  auto env_of = [&](const std::vector<double>& st) {
    Env env;
    for (int i = 0; i < n; ++i) env.set(ChartSpec::x(i), st[i]);
    for (int a = 0; a < k; ++a) env.set(ChartSpec::y(a), st[n + a]);
    return env;
  };
  OdeRhs rhs = [&](double, const std::vector<double>& st, std::vector<double>& d) {
    Env env = env_of(st);
    for (int i = 0; i < n; ++i) d[i] = xdot[i].evaluate(env);
    for (int a = 0; a < k; ++a) d[n + a] = f.f[a].evaluate(env);
  };
  std::vector<double> state = start.x;
  state.insert(state.end(), start.y.begin(), start.y.end());
  OdeSolution sol = rk4_integrate(rhs, 0.0, span, state, cfg.h_step);
  if (sol.u.size() < 5) throw TransportError("Euler-Lagrange check needs at least 4 steps");
  const double dt = sol.u[1] - sol.u[0];

  std::vector<Expr> momentum(k), force(k);
  for (int b = 0; b < k; ++b) {
    momentum[b] = differentiate(L, ChartSpec::y(b));
    Expr acc;
    for (int i = 0; i < n; ++i) acc = acc + spec.anchor.rho[i][b + 1] * differentiate(L, ChartSpec::x(i));
    for (int g = 0; g < k; ++g) {
      Expr coeff = spec.C0[g][b];
      for (int mu = 0; mu < k; ++mu) coeff = coeff + spec.C[g][mu][b] * ChartSpec::yv(mu);
      acc = acc + coeff * differentiate(L, ChartSpec::y(g));
    }
    force[b] = acc;
  }
  std::vector<std::vector<double>> p;
  for (const auto& st : sol.states) p.push_back(evaluate_all(momentum, env_of(st)));

  double worst = 0.0;
  double worst_u = 0.0;
  for (std::size_t j = 2; j + 2 < sol.u.size(); ++j) {
    auto fv = evaluate_all(force, env_of(sol.states[j]));
    for (int b = 0; b < k; ++b) {
      double dp = (-p[j + 2][b] + 8.0 * p[j + 1][b] - 8.0 * p[j - 1][b] + p[j - 2][b]) / (12.0 * dt);
      double r = std::abs(dp - fv[b]);
      if (r > worst) {
        worst = r;
        worst_u = sol.u[j];
      }
    }
  }
  ResidualReport report;
  report.add("d/dt dL/dy - (rho dL/dx + C dL/dy)", worst, tol, Env{{"u", worst_u}});
  return report;
}

}  // namespace gconn
