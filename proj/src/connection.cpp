#include "gconn/connection.hpp"

#include <cmath>

namespace gconn {

namespace {

std::map<std::string, Expr, std::less<>> fibre_to_zero(int k) {
  std::map<std::string, Expr, std::less<>> m;
  for (int a = 0; a < k; ++a) m[ChartSpec::y(a)] = Expr();
  return m;
}

bool depends_on_fibre(const Expr& e, int k) {
  for (int a = 0; a < k; ++a) {
    if (e.depends_on(ChartSpec::y(a))) return true;
  }
  return false;
}

std::string index_label(const ChartSpec& chart, int alpha, int a) {
  return "(" + std::to_string(alpha + 1) + "," + std::to_string(chart.v_label(a)) + ")";
}

}  // namespace

Connection Connection::flat(const ChartSpec& chart, const AnchorSpec& anchor) {
  return {chart, anchor, std::vector<std::vector<Expr>>(chart.k, std::vector<Expr>(chart.l))};
}

std::vector<std::string> Connection::validate() const {
  auto errors = validate_chart(chart, anchor);
  if (int(gamma.size()) != chart.k) {
    errors.push_back("connection has " + std::to_string(gamma.size()) + " rows, expected k=" +
                     std::to_string(chart.k));
  }
  for (std::size_t alpha = 0; alpha < gamma.size(); ++alpha) {
    if (int(gamma[alpha].size()) != chart.l) {
      errors.push_back("connection row " + std::to_string(alpha + 1) + " has " +
                       std::to_string(gamma[alpha].size()) + " entries, expected l=" +
                       std::to_string(chart.l));
    }
    for (std::size_t a = 0; a < gamma[alpha].size(); ++a) {
      for (const auto& v : gamma[alpha][a].free_variables()) {
        if (v == "u" || !chart.scope().accepts(v)) {
          errors.push_back("connection coefficient " + index_label(chart, int(alpha), int(a)) +
                           " depends on " + v + ", expected x and y only");
        }
      }
    }
  }
  return errors;
}

SampleBox default_box(const ChartSpec& chart) { return SampleBox::chart(chart.n, chart.k, -1.0, 1.0, 32, 42); }

TangentVector h_apply(const Connection& conn, const EPoint& e, const std::vector<double>& v) {
  Env env = e.env();
  TangentVector t{std::vector<double>(conn.chart.n, 0.0), std::vector<double>(conn.chart.k, 0.0)};
  for (int a = 0; a < conn.chart.l; ++a) {
    if (v[a] == 0.0) continue;
    for (int i = 0; i < conn.chart.n; ++i) t.xdot[i] += conn.anchor.rho[i][a].evaluate(env) * v[a];
    for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
      t.ydot[alpha] -= conn.gamma[alpha][a].evaluate(env) * v[a];
    }
  }
  return t;
}

ProlongedSection ProlongedSection::zero(const ChartSpec& chart) {
  return {std::vector<Expr>(chart.l), std::vector<Expr>(chart.k)};
}

ProlongedSection ProlongedSection::basis_X(const ChartSpec& chart, int a) {
  auto p = zero(chart);
  p.z[a] = Expr::constant(1.0);
  return p;
}

ProlongedSection ProlongedSection::basis_V(const ChartSpec& chart, int alpha) {
  auto p = zero(chart);
  p.Z[alpha] = Expr::constant(1.0);
  return p;
}

ProlongedSection operator+(const ProlongedSection& p, const ProlongedSection& q) {
  ProlongedSection r = p;
  for (std::size_t a = 0; a < r.z.size(); ++a) r.z[a] = r.z[a] + q.z[a];
  for (std::size_t a = 0; a < r.Z.size(); ++a) r.Z[a] = r.Z[a] + q.Z[a];
  return r;
}

ProlongedSection operator-(const ProlongedSection& p, const ProlongedSection& q) {
  ProlongedSection r = p;
  for (std::size_t a = 0; a < r.z.size(); ++a) r.z[a] = r.z[a] - q.z[a];
  for (std::size_t a = 0; a < r.Z.size(); ++a) r.Z[a] = r.Z[a] - q.Z[a];
  return r;
}

ProlongedSection operator*(const Expr& f, const ProlongedSection& p) {
  ProlongedSection r = p;
  for (auto& c : r.z) c = f * c;
  for (auto& c : r.Z) c = f * c;
  return r;
}

AdaptedSection to_adapted(const Connection& conn, const ProlongedSection& p) {
  AdaptedSection out{p.z, p.Z};
  for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
    for (int a = 0; a < conn.chart.l; ++a) out.W[alpha] = out.W[alpha] + p.z[a] * conn.gamma[alpha][a];
  }
  return out;
}

ProlongedSection from_adapted(const Connection& conn, const AdaptedSection& p) {
  ProlongedSection out{p.z, p.W};
  for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
    for (int a = 0; a < conn.chart.l; ++a) out.Z[alpha] = out.Z[alpha] - p.z[a] * conn.gamma[alpha][a];
  }
  return out;
}

std::vector<ProlongedSection> horizontal_basis(const Connection& conn) {
  std::vector<ProlongedSection> basis;
  for (int a = 0; a < conn.chart.l; ++a) {
    auto h = ProlongedSection::basis_X(conn.chart, a);
    for (int alpha = 0; alpha < conn.chart.k; ++alpha) h.Z[alpha] = -conn.gamma[alpha][a];
    basis.push_back(std::move(h));
  }
  return basis;
}

std::vector<double> connection_map_K(const Connection& conn, const EPoint& e,
                                     const std::vector<double>& v, const TangentVector& Q) {
  Env env = e.env();
  for (int i = 0; i < conn.chart.n; ++i) {
    double rho_v = 0.0;
    for (int a = 0; a < conn.chart.l; ++a) rho_v += conn.anchor.rho[i][a].evaluate(env) * v[a];
    if (std::abs(Q.xdot[i] - rho_v) > 1e-9) {
      throw ConnectionError("not in prolongation: xdot" + std::to_string(i + 1) + "=" +
                            format_number(Q.xdot[i]) + " but rho(v)=" + format_number(rho_v));
    }
  }
  std::vector<double> K = Q.ydot;
  for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
    for (int a = 0; a < conn.chart.l; ++a) K[alpha] += conn.gamma[alpha][a].evaluate(env) * v[a];
  }
  return K;
}

Connection AffineSplit::connection() const {
  Connection conn = Connection::flat(chart, anchor);
  for (int alpha = 0; alpha < chart.k; ++alpha) {
    for (int a = 0; a < chart.l; ++a) {
      Expr g = gamma0[alpha][a];
      for (int beta = 0; beta < chart.k; ++beta) g = g + gamma1[alpha][a][beta] * ChartSpec::yv(beta);
      conn.gamma[alpha][a] = g;
    }
  }
  return conn;
}

namespace {

// First offending (alpha, a) whose second fibre derivatives do not vanish.
std::optional<NotAffineError> find_non_affine(const Connection& conn, const SampleBox& box) {
  std::optional<std::vector<Env>> points;
  const int k = conn.chart.k;
  for (int alpha = 0; alpha < k; ++alpha) {
    for (int a = 0; a < conn.chart.l; ++a) {
      const Expr& g = conn.gamma[alpha][a];
      for (int beta = 0; beta < k; ++beta) {
        Expr d1 = differentiate(g, ChartSpec::y(beta));
        if (!depends_on_fibre(d1, k)) continue;
        for (int gam = beta; gam < k; ++gam) {
          Expr d2 = differentiate(d1, ChartSpec::y(gam));
          if (d2.is_zero_constant()) continue;
          if (!points) points = box.points();
          Env witness;
          double m = max_abs(d2, *points, &witness);
          if (m > 1e-10) {
            return NotAffineError(alpha, a, witness,
                                  "connection coefficient " + index_label(conn.chart, alpha, a) +
                                      " is not affine in the fibre: second derivative " +
                                      format_number(m) + " at " + witness.describe());
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

bool is_affine(const Connection& conn, const SampleBox& box) {
  return !find_non_affine(conn, box).has_value();
}

AffineSplit linearisation_at_zero(const Connection& conn) {
  const auto zero = fibre_to_zero(conn.chart.k);
  AffineSplit split{conn.chart, conn.anchor, {}, {}};
  split.gamma0.assign(conn.chart.k, std::vector<Expr>(conn.chart.l));
  split.gamma1.assign(conn.chart.k,
                      std::vector<std::vector<Expr>>(conn.chart.l, std::vector<Expr>(conn.chart.k)));
  for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
    for (int a = 0; a < conn.chart.l; ++a) {
      const Expr& g = conn.gamma[alpha][a];
      split.gamma0[alpha][a] = substitute(g, zero);
      for (int beta = 0; beta < conn.chart.k; ++beta) {
        split.gamma1[alpha][a][beta] = substitute(differentiate(g, ChartSpec::y(beta)), zero);
      }
    }
  }
  return split;
}

AffineSplit affine_split(const Connection& conn, const SampleBox& box) {
  if (auto err = find_non_affine(conn, box)) throw *err;
  AffineSplit split = linearisation_at_zero(conn);
  // The reassembled coefficients must reproduce the originals.
  Connection back = split.connection();
  auto points = box.points();
  for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
    for (int a = 0; a < conn.chart.l; ++a) {
      Expr diff = conn.gamma[alpha][a] - back.gamma[alpha][a];
      Env witness;
      if (!diff.is_zero_constant() && max_abs(diff, points, &witness) > 1e-10) {
        throw NotAffineError(alpha, a, witness,
                             "affine split does not reproduce coefficient " +
                                 index_label(conn.chart, alpha, a) + " at " + witness.describe());
      }
    }
  }
  return split;
}

Expr anchor_derivative(const AnchorSpec& anchor, const std::vector<Expr>& s, const Expr& f) {
  Expr out;
  for (std::size_t i = 0; i < anchor.rho.size(); ++i) {
    Expr df = differentiate(f, ChartSpec::x(int(i)));
    if (df.is_zero_constant()) continue;
    Expr rs;
    for (std::size_t a = 0; a < s.size(); ++a) rs = rs + anchor.rho[i][a] * s[a];
    out = out + rs * df;
  }
  return out;
}

VectorFieldE horizontal_field(const Connection& conn, const SectionV& s) {
  auto field = VectorFieldE::zero(conn.chart.n, conn.chart.k);
  for (int a = 0; a < conn.chart.l; ++a) {
    for (int i = 0; i < conn.chart.n; ++i) field.dx[i] = field.dx[i] + conn.anchor.rho[i][a] * s.s[a];
    for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
      field.dy[alpha] = field.dy[alpha] - conn.gamma[alpha][a] * s.s[a];
    }
  }
  return field;
}

VectorFieldE vertical_field(const ChartSpec& chart, const TildeSection& X) {
  auto field = VectorFieldE::zero(chart.n, chart.k);
  field.dy = tilde_decompose(X).bar.X;
  return field;
}

SectionEbar nabla(const AffineSplit& split, const SectionV& s, const SectionE& sigma) {
  SectionEbar out = nabla_bar(split, s, SectionEbar{sigma.sigma});
  for (int alpha = 0; alpha < split.chart.k; ++alpha) {
    for (int a = 0; a < split.chart.l; ++a) {
      out.sigma[alpha] = out.sigma[alpha] + split.gamma0[alpha][a] * s.s[a];
    }
  }
  return out;
}

SectionEbar nabla_bar(const AffineSplit& split, const SectionV& s, const SectionEbar& sigma) {
  SectionEbar out{std::vector<Expr>(split.chart.k)};
  for (int alpha = 0; alpha < split.chart.k; ++alpha) {
    Expr acc = anchor_derivative(split.anchor, s.s, sigma.sigma[alpha]);
    for (int a = 0; a < split.chart.l; ++a) {
      for (int beta = 0; beta < split.chart.k; ++beta) {
        acc = acc + split.gamma1[alpha][a][beta] * sigma.sigma[beta] * s.s[a];
      }
    }
    out.sigma[alpha] = acc;
  }
  return out;
}

TildeSection nabla_tilde(const Connection& conn, const SectionV& s, const TildeSection& X) {
  const int k = conn.chart.k;
  if (depends_on_fibre(X.X0, k)) throw ConnectionError("nabla_tilde needs a basic section");
  for (const auto& c : X.X) {
    if (depends_on_fibre(c, k)) throw ConnectionError("nabla_tilde needs a basic section");
  }
  if (auto err = find_non_affine(conn, default_box(conn.chart))) throw *err;

  VectorFieldE bracket = lie_bracket(horizontal_field(conn, s), vertical_field(conn.chart, X));
  Expr df = anchor_derivative(conn.anchor, s.s, X.X0);
  TildeSection out{df, std::vector<Expr>(k)};
  for (int alpha = 0; alpha < k; ++alpha) out.X[alpha] = bracket.dy[alpha] + df * ChartSpec::yv(alpha);
  return out;
}

ResidualReport verify_bracket_formulas(const Connection& conn, const SectionV& s, const SectionE& sigma,
                            const SectionEbar& sigmabar, const SampleBox& box, double tol) {
  AffineSplit split = affine_split(conn, box);
  auto points = box.points();
  VectorFieldE hs = horizontal_field(conn, s);

  ResidualReport report;
  auto compare = [&](const std::string& label, const TildeSection& X, const SectionEbar& formula) {
    VectorFieldE br = lie_bracket(hs, vertical_field(conn.chart, X));
    Env witness;
    double base = sweep_max(points, [&](const Env& p) {
      double m = 0.0;
      for (const auto& c : br.dx) m = std::max(m, std::abs(c.evaluate(p)));
      return m;
    }, &witness);
    report.add(label + " base part", base, tol, witness);
    witness = {};
    double fibre = sweep_max(points, [&](const Env& p) {
      double m = 0.0;
      for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
        m = std::max(m, std::abs(br.dy[alpha].evaluate(p) - formula.sigma[alpha].evaluate(p)));
      }
      return m;
    }, &witness);
    report.add(label + " vertical part", fibre, tol, witness);
  };
  compare("[hs, v sigma]", sigma.tilde(), nabla(split, s, sigma));
  compare("[hs, v sigmabar]", sigmabar.tilde(), nabla_bar(split, s, sigmabar));
  return report;
}

ResidualReport verify_horizontal_from_bracket(const Connection& conn, const SectionV& s, const SectionE& sigma,
                           const SectionEbar& sigmabar, const SampleBox& box, double tol) {
  AffineSplit split = affine_split(conn, box);
  auto points = box.points();
  const int k = conn.chart.k;
  VectorFieldE hs = horizontal_field(conn, s);
  VectorFieldE br = lie_bracket(hs, vertical_field(conn.chart, sigma.tilde()));
  VectorFieldE br_bar = lie_bracket(hs, vertical_field(conn.chart, sigmabar.tilde()));
  std::vector<Expr> tangent(k), tangent_bar(k);
  for (int alpha = 0; alpha < k; ++alpha) {
    tangent[alpha] = anchor_derivative(conn.anchor, s.s, sigma.sigma[alpha]);
    tangent_bar[alpha] = anchor_derivative(conn.anchor, s.s, sigmabar.sigma[alpha]);
  }

  ResidualReport report;
  Env witness;
  double r = sweep_max(points, [&](const Env& p) {
    Env on_image = p;
    for (int alpha = 0; alpha < k; ++alpha) on_image.set(ChartSpec::y(alpha), sigma.sigma[alpha].evaluate(p));
    double m = 0.0;
    for (int alpha = 0; alpha < k; ++alpha) {
      double lhs = hs.dy[alpha].evaluate(on_image);
      double rhs = tangent[alpha].evaluate(on_image) - br.dy[alpha].evaluate(on_image);
      m = std::max(m, std::abs(lhs - rhs));
    }
    return m;
  }, &witness);
  report.add("h(sigma, s) = T sigma(rho s) - [hs, v sigma]", r, tol, witness);

  witness = {};
  r = sweep_max(points, [&](const Env& p) {
    double m = 0.0;
    for (int alpha = 0; alpha < k; ++alpha) {
      double lhs = 0.0;
      for (int a = 0; a < conn.chart.l; ++a) {
        for (int beta = 0; beta < k; ++beta) {
          lhs -= split.gamma1[alpha][a][beta].evaluate(p) * sigmabar.sigma[beta].evaluate(p) *
                 s.s[a].evaluate(p);
        }
      }
      double rhs = tangent_bar[alpha].evaluate(p) - br_bar.dy[alpha].evaluate(p);
      m = std::max(m, std::abs(lhs - rhs));
    }
    return m;
  }, &witness);
  report.add("hbar(sigmabar, s) = T sigmabar(rho s) - [hs, v sigmabar]", r, tol, witness);
  return report;
}

}  // namespace gconn
