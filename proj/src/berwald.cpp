#include "gconn/berwald.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace gconn {

std::string to_string(BerwaldVariant v) { return v == BerwaldVariant::Plain ? "plain" : "hat"; }

BerwaldVariant parse_variant(std::string_view text) {
  if (text == "plain") return BerwaldVariant::Plain;
  if (text == "hat") return BerwaldVariant::Hat;
  throw ConfigError("unknown Berwald variant '" + std::string(text) + "' (expected plain or hat)");
}

BerwaldTable berwald_table(const Connection& conn, BerwaldVariant variant) {
  const int k = conn.chart.k;
  const int l = conn.chart.l;
  BerwaldTable t;
  t.chart = conn.chart;
  t.variant = variant;
  t.v_e0_sign = variant == BerwaldVariant::Plain ? 0.0 : -1.0;
  t.d_h_e0.assign(k, std::vector<Expr>(l));
  t.dbar_h_e.assign(k, std::vector<std::vector<Expr>>(l, std::vector<Expr>(k)));
  for (int gam = 0; gam < k; ++gam) {
    for (int a = 0; a < l; ++a) {
      const Expr& g = conn.gamma[gam][a];
      Expr e0 = g;
      for (int beta = 0; beta < k; ++beta) {
        Expr d = differentiate(g, ChartSpec::y(beta));
        t.dbar_h_e[gam][a][beta] = d;
        e0 = e0 - ChartSpec::yv(beta) * d;
      }
      t.d_h_e0[gam][a] = e0;
    }
  }
  return t;
}

nlohmann::json BerwaldTable::to_json() const {
  nlohmann::json j;
  j["variant"] = to_string(variant);
  nlohmann::json e0 = nlohmann::json::array();
  nlohmann::json ebar = nlohmann::json::array();
  for (int gam = 0; gam < chart.k; ++gam) {
    for (int a = 0; a < chart.l; ++a) {
      e0.push_back({{"gamma", gam + 1}, {"a", chart.v_label(a)}, {"expr", d_h_e0[gam][a].str()}});
      for (int beta = 0; beta < chart.k; ++beta) {
        ebar.push_back({{"gamma", gam + 1},
                        {"a", chart.v_label(a)},
                        {"beta", beta + 1},
                        {"expr", dbar_h_e[gam][a][beta].str()}});
      }
    }
  }
  j["D_H_e0"] = e0;
  j["Dbar_H_ebar"] = ebar;
  j["D_V_e0"] = variant == BerwaldVariant::Plain ? "0" : "-ebar_alpha";
  return j;
}

std::string BerwaldTable::to_text() const {
  std::ostringstream out;
  out << "Berwald table (" << to_string(variant) << ")\n";
  std::vector<std::pair<std::string, std::string>> rows;
  for (int gam = 0; gam < chart.k; ++gam) {
    for (int a = 0; a < chart.l; ++a) {
      rows.emplace_back("D_{H_" + std::to_string(chart.v_label(a)) + "} e_0 [" + std::to_string(gam + 1) + "]",
                        d_h_e0[gam][a].str());
    }
  }
  for (int gam = 0; gam < chart.k; ++gam) {
    for (int a = 0; a < chart.l; ++a) {
      for (int beta = 0; beta < chart.k; ++beta) {
        rows.emplace_back("Dbar_{H_" + std::to_string(chart.v_label(a)) + "} ebar_" + std::to_string(beta + 1) +
                              " [" + std::to_string(gam + 1) + "]",
                          dbar_h_e[gam][a][beta].str());
      }
    }
  }
  rows.emplace_back("D_{V_alpha} e_0", variant == BerwaldVariant::Plain ? "0" : "-ebar_alpha");
  rows.emplace_back("Dbar_{V_alpha} ebar_beta", "0");
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  for (const auto& [label, value] : rows) {
    out << "  " << std::left << std::setw(int(width)) << label << "  " << value << '\n';
  }
  return out.str();
}

Expr prolonged_anchor(const Connection& conn, const AdaptedSection& Z, const Expr& F) {
  const int k = conn.chart.k;
  std::vector<Expr> dy(k);
  for (int alpha = 0; alpha < k; ++alpha) dy[alpha] = differentiate(F, ChartSpec::y(alpha));
  Expr out;
  for (int a = 0; a < conn.chart.l; ++a) {
    if (Z.z[a].is_zero_constant()) continue;
    Expr hf;
    for (int i = 0; i < conn.chart.n; ++i) {
      hf = hf + conn.anchor.rho[i][a] * differentiate(F, ChartSpec::x(i));
    }
    for (int alpha = 0; alpha < k; ++alpha) hf = hf - conn.gamma[alpha][a] * dy[alpha];
    out = out + Z.z[a] * hf;
  }
  for (int alpha = 0; alpha < k; ++alpha) out = out + Z.W[alpha] * dy[alpha];
  return out;
}

TildeSection covariant_D(const BerwaldTable& table, const Connection& conn, const AdaptedSection& Z,
                         const TildeSection& X) {
  const int k = conn.chart.k;
  TildeSection out{prolonged_anchor(conn, Z, X.X0), std::vector<Expr>(k)};
  for (int gam = 0; gam < k; ++gam) {
    Expr de0;
    for (int a = 0; a < conn.chart.l; ++a) de0 = de0 + Z.z[a] * table.d_h_e0[gam][a];
    if (table.v_e0_sign != 0.0) de0 = de0 + table.v_e0_sign * Z.W[gam];
    Expr acc = X.X0 * de0 + prolonged_anchor(conn, Z, X.X[gam]);
    for (int beta = 0; beta < k; ++beta) {
      Expr dbar;
      for (int a = 0; a < conn.chart.l; ++a) dbar = dbar + Z.z[a] * table.dbar_h_e[gam][a][beta];
      acc = acc + X.X[beta] * dbar;
    }
    out.X[gam] = acc;
  }
  return out;
}

TildeSection covariant_D(const Connection& conn, BerwaldVariant variant, const AdaptedSection& Z,
                         const TildeSection& X) {
  return covariant_D(berwald_table(conn, variant), conn, Z, X);
}

ResidualReport verify_affine_reproduction(const Connection& conn, const SampleBox& box, double tol) {
  AffineSplit split = affine_split(conn, box);
  BerwaldTable table = berwald_table(conn, BerwaldVariant::Plain);
  auto points = box.points();
  ResidualReport report;
  const auto& chart = conn.chart;
  for (int gam = 0; gam < chart.k; ++gam) {
    for (int a = 0; a < chart.l; ++a) {
      std::string idx = std::to_string(gam + 1) + "," + std::to_string(chart.v_label(a));
      Env witness;
      double r = max_abs(table.d_h_e0[gam][a] - split.gamma0[gam][a], points, &witness);
      report.add("D_H e0 vs Gamma0 (" + idx + ")", r, tol, witness);
      for (int beta = 0; beta < chart.k; ++beta) {
        witness = {};
        r = max_abs(table.dbar_h_e[gam][a][beta] - split.gamma1[gam][a][beta], points, &witness);
        report.add("Dbar_H ebar vs Gamma1 (" + idx + "," + std::to_string(beta + 1) + ")", r, tol, witness);
      }
    }
  }
  return report;
}

ResidualReport verify_parallelism(const Connection& conn, const ParallelismInput& in, const TransportConfig& cfg,
                                  const SampleBox& box, double tol_symbolic) {
  const int n = conn.chart.n;
  const int k = conn.chart.k;
  const int l = conn.chart.l;
  ResidualReport report;
  BerwaldTable plain = berwald_table(conn, BerwaldVariant::Plain);
  BerwaldTable hat = berwald_table(conn, BerwaldVariant::Hat);

  // (a) Integrate the flow of h(s) together with psi, the pi*E-part of a
  // section X with D_{Hs} X = 0 along the flow:
  //   psi' = -s^a (D_{H_a} e_0 + Dbar_{H_a} ebar_beta psi^beta).
  Env start = in.e.env();
  std::vector<double> psi0 = evaluate_all(in.sigma.sigma, start);
  OdeRhs rhs = [&](double, const std::vector<double>& st, std::vector<double>& d) {
    Env env;
    for (int i = 0; i < n; ++i) env.set(ChartSpec::x(i), st[i]);
    for (int a = 0; a < k; ++a) env.set(ChartSpec::y(a), st[n + a]);
    auto sv = evaluate_all(in.s.s, env);
    const double* psi = st.data() + n + k;
    for (int i = 0; i < n; ++i) {
      d[i] = 0.0;
      for (int a = 0; a < l; ++a) d[i] += conn.anchor.rho[i][a].evaluate(env) * sv[a];
    }
    for (int gam = 0; gam < k; ++gam) {
      double dy = 0.0;
      double dpsi = 0.0;
      for (int a = 0; a < l; ++a) {
        if (sv[a] == 0.0) continue;
        dy -= conn.gamma[gam][a].evaluate(env) * sv[a];
        double acc = plain.d_h_e0[gam][a].evaluate(env);
        for (int beta = 0; beta < k; ++beta) acc += plain.dbar_h_e[gam][a][beta].evaluate(env) * psi[beta];
        dpsi -= sv[a] * acc;
      }
      d[n + gam] = dy;
      d[n + k + gam] = dpsi;
    }
  };
  std::vector<double> state = in.e.x;
  state.insert(state.end(), in.e.y.begin(), in.e.y.end());
  state.insert(state.end(), psi0.begin(), psi0.end());
  OdeSolution sol = rk4_integrate(rhs, 0.0, in.span, state, cfg.h_step);

  // The same section read through Lie transport: X(u) = flow point + eta(u)
  // with eta(0) = X(0) - e.
  std::vector<double> ebar(k);
  for (int a = 0; a < k; ++a) ebar[a] = psi0[a] - in.e.y[a];
  LieTransport lie = lie_transport(conn, in.s, in.e, ebar, in.span, cfg);
  double worst = 0.0;
  double worst_u = 0.0;
  for (std::size_t j = 0; j < sol.u.size(); ++j) {
    for (int a = 0; a < k; ++a) {
      double r = std::abs(sol.states[j][n + k + a] - (lie.flow.points[j].y[a] + lie.eta[j][a]));
      if (r > worst) {
        worst = r;
        worst_u = sol.u[j];
      }
    }
  }
  report.add("horizontal: D-parallel vs Lie transport", worst, cfg.tol_report, Env{{"u", worst_u}});

  auto points = box.points();
  AdaptedSection vertical{std::vector<Expr>(l), in.ybar.sigma};

  // (b) translation in pi*E: a basic section of E is D-parallel vertically.
  TildeSection d_plain = covariant_D(plain, conn, vertical, in.sigma.tilde());
  Env witness;
  double r = sweep_max(points, [&](const Env& p) {
    double m = std::abs(d_plain.X0.evaluate(p));
    for (const auto& c : d_plain.X) m = std::max(m, std::abs(c.evaluate(p)));
    return m;
  }, &witness);
  report.add("vertical plain: D_{V ybar} sigma", r, tol_symbolic, witness);

  // (c) translation in pi*Ebar: I + sigmabar is hat-parallel vertically.
  TildeSection shifted = TildeSection::canonical(k);
  for (int a = 0; a < k; ++a) shifted.X[a] = shifted.X[a] + in.sigmabar.sigma[a];
  TildeSection d_hat = covariant_D(hat, conn, vertical, shifted);
  witness = {};
  r = sweep_max(points, [&](const Env& p) {
    double m = std::abs(d_hat.X0.evaluate(p));
    for (const auto& c : d_hat.X) m = std::max(m, std::abs(c.evaluate(p)));
    return m;
  }, &witness);
  report.add("vertical hat: D^_{V ybar} (I + sigmabar)", r, tol_symbolic, witness);
  return report;
}

}  // namespace gconn
