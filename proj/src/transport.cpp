#include "gconn/transport.hpp"

#include <cmath>
#include <ostream>

namespace gconn {

namespace {

bool finite(const std::vector<double>& v) {
  for (double d : v) {
    if (!std::isfinite(d)) return false;
  }
  return true;
}

Env base_env(const std::vector<double>& x) {
  Env env;
  for (std::size_t i = 0; i < x.size(); ++i) env.set(ChartSpec::x(int(i)), x[i]);
  return env;
}

void set_fibre(Env& env, const double* y, int k) {
  for (int a = 0; a < k; ++a) env.set(ChartSpec::y(a), y[a]);
}

// d Gamma^alpha_a / d y^beta
std::vector<std::vector<std::vector<Expr>>> fibre_jacobian(const Connection& conn) {
  std::vector<std::vector<std::vector<Expr>>> d(conn.chart.k);
  for (int alpha = 0; alpha < conn.chart.k; ++alpha) {
    d[alpha].resize(conn.chart.l);
    for (int a = 0; a < conn.chart.l; ++a) {
      for (int beta = 0; beta < conn.chart.k; ++beta) {
        d[alpha][a].push_back(differentiate(conn.gamma[alpha][a], ChartSpec::y(beta)));
      }
    }
  }
  return d;
}

void require_start(const AdmissibleCurve& c, const AnchorSpec& anchor, const EPoint& e, double from_u) {
  auto report = check_admissible(c, anchor);
  if (!report.pass()) {
    throw TransportError("curve is not admissible: residual " + format_number(report.max_residual) +
                         " at u=" + format_number(report.witness_u));
  }
  auto x0 = c.base_at(from_u);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (std::abs(x0[i] - e.x[i]) > 1e-9) {
      throw TransportError("initial point is not over c_M(" + format_number(from_u) + ")");
    }
  }
}

// Base flow of rho(x) s(x), tabulated at half steps so that every RK4 stage
// of a full-step integration lands on a node.
struct TabulatedBase {
  double h_half = 0.0;
  OdeSolution table;
  std::vector<std::vector<double>> velocity;  // s(x) at each node

  void operator()(double u, std::vector<double>& x, std::vector<double>& c) const {
    auto j = static_cast<std::size_t>(std::llround(u / h_half));
    if (j >= table.u.size() || std::abs(table.u[j] - u) > 1e-9 * std::max(1.0, std::abs(u))) {
      throw TransportError("tabulated base curve queried off its grid at u=" + format_number(u));
    }
    x = table.states[j];
    c = velocity[j];
  }
};

TabulatedBase tabulate_base_flow(const Connection& conn, const SectionV& s, const std::vector<double>& x0,
                                 double span, double h) {
  const int n = conn.chart.n;
  const int l = conn.chart.l;
  OdeRhs rhs = [&](double, const std::vector<double>& x, std::vector<double>& dx) {
    Env env = base_env(x);
    auto sv = evaluate_all(s.s, env);
    for (int i = 0; i < n; ++i) {
      dx[i] = 0.0;
      for (int a = 0; a < l; ++a) dx[i] += conn.anchor.rho[i][a].evaluate(env) * sv[a];
    }
  };
  long steps = std::max(1L, std::lround(span / h));
  TabulatedBase base;
  base.h_half = span / (2.0 * double(steps));
  base.table = rk4_integrate(rhs, 0.0, span, x0, base.h_half);
  for (const auto& x : base.table.states) base.velocity.push_back(evaluate_all(s.s, base_env(x)));
  return base;
}

}  // namespace

OdeSolution rk4_integrate(const OdeRhs& rhs, double u0, double u1, std::vector<double> state, double h) {
  if (!(h > 0.0)) throw TransportError("step size must be positive");
  const double span = u1 - u0;
  const long steps = std::max(1L, std::lround(std::abs(span) / h));
  const double dt = span / double(steps);
  const std::size_t dim = state.size();

  OdeSolution sol;
  sol.u.reserve(steps + 1);
  sol.states.reserve(steps + 1);
  sol.u.push_back(u0);
  sol.states.push_back(state);
  if (span == 0.0) return sol;

  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  for (long j = 0; j < steps; ++j) {
    double u = u0 + dt * double(j);
    rhs(u, state, k1);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = state[d] + 0.5 * dt * k1[d];
    rhs(u + 0.5 * dt, tmp, k2);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = state[d] + 0.5 * dt * k2[d];
    rhs(u + 0.5 * dt, tmp, k3);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = state[d] + dt * k3[d];
    rhs(u + dt, tmp, k4);
    for (std::size_t d = 0; d < dim; ++d) {
      state[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    }
    double u_next = j + 1 == steps ? u1 : u0 + dt * double(j + 1);
    if (!finite(state)) {
      throw TransportError("integration blew up (non-finite state) near u=" + format_number(u_next));
    }
    sol.u.push_back(u_next);
    sol.states.push_back(state);
  }
  return sol;
}

CurveFn curve_fn(const AdmissibleCurve& c) {
  return [c](double u, std::vector<double>& x, std::vector<double>& v) {
    x = c.base_at(u);
    v = c.fibre_at(u);
  };
}

void DiscreteCurve::write_csv(std::ostream& out) const {
  if (points.empty()) return;
  out << "u";
  for (std::size_t i = 0; i < points[0].x.size(); ++i) out << ",x" << i + 1;
  for (std::size_t a = 0; a < points[0].y.size(); ++a) out << ",y" << a + 1;
  out << '\n';
  for (std::size_t j = 0; j < points.size(); ++j) {
    out << format_number(u[j]);
    for (double v : points[j].x) out << ',' << format_number(v);
    for (double v : points[j].y) out << ',' << format_number(v);
    out << '\n';
  }
}

DiscreteCurve horizontal_lift_curve(const Connection& conn, const AdmissibleCurve& c, const EPoint& e,
                                    double from_u, double to_u, const TransportConfig& cfg) {
  require_start(c, conn.anchor, e, from_u);
  const int k = conn.chart.k;
  const int l = conn.chart.l;
  OdeRhs rhs = [&](double u, const std::vector<double>& y, std::vector<double>& dy) {
    Env at_u{{"u", u}};
    Env env = base_env(evaluate_all(c.cM, at_u));
    set_fibre(env, y.data(), k);
    auto cv = evaluate_all(c.c, at_u);
    for (int alpha = 0; alpha < k; ++alpha) {
      dy[alpha] = 0.0;
      for (int a = 0; a < l; ++a) dy[alpha] -= conn.gamma[alpha][a].evaluate(env) * cv[a];
    }
  };
  OdeSolution sol = rk4_integrate(rhs, from_u, to_u, e.y, cfg.h_step);
  DiscreteCurve curve;
  curve.u = sol.u;
  for (std::size_t j = 0; j < sol.u.size(); ++j) {
    curve.points.push_back({c.base_at(sol.u[j]), sol.states[j]});
  }
  return curve;
}

EPoint parallel_translate(const Connection& conn, const AdmissibleCurve& c, const EPoint& e,
                          double from_u, double to_u, const TransportConfig& cfg) {
  return horizontal_lift_curve(conn, c, e, from_u, to_u, cfg).points.back();
}

OdeSolution linear_transport_along(const AffineSplit& split, const CurveFn& c, double a, double b,
                                   const std::vector<double>& ebar, const TransportConfig& cfg) {
  const int k = split.chart.k;
  const int l = split.chart.l;
  OdeRhs rhs = [&](double u, const std::vector<double>& eta, std::vector<double>& deta) {
    std::vector<double> x, cv;
    c(u, x, cv);
    Env env = base_env(x);
    for (int alpha = 0; alpha < k; ++alpha) {
      deta[alpha] = 0.0;
      for (int av = 0; av < l; ++av) {
        if (cv[av] == 0.0) continue;
        double acc = 0.0;
        for (int beta = 0; beta < k; ++beta) acc += split.gamma1[alpha][av][beta].evaluate(env) * eta[beta];
        deta[alpha] -= acc * cv[av];
      }
    }
  };
  return rk4_integrate(rhs, a, b, ebar, cfg.h_step);
}

std::vector<double> linear_parallel_translate(const AffineSplit& split, const AdmissibleCurve& c,
                                              const std::vector<double>& ebar, double to_u,
                                              const TransportConfig& cfg) {
  auto report = check_admissible(c, split.anchor);
  if (!report.pass()) {
    throw TransportError("curve is not admissible: residual " + format_number(report.max_residual));
  }
  return linear_transport_along(split, curve_fn(c), c.a, to_u, ebar, cfg).states.back();
}

LieTransport lie_transport(const Connection& conn, const SectionV& s, const EPoint& e,
                           const std::vector<double>& ebar, double span, const TransportConfig& cfg) {
  const int n = conn.chart.n;
  const int k = conn.chart.k;
  const int l = conn.chart.l;
  const auto dgamma = fibre_jacobian(conn);
  OdeRhs rhs = [&](double, const std::vector<double>& st, std::vector<double>& d) {
    Env env = base_env(std::vector<double>(st.begin(), st.begin() + n));
    set_fibre(env, st.data() + n, k);
    auto sv = evaluate_all(s.s, env);
    const double* eta = st.data() + n + k;
    for (int i = 0; i < n; ++i) {
      d[i] = 0.0;
      for (int a = 0; a < l; ++a) d[i] += conn.anchor.rho[i][a].evaluate(env) * sv[a];
    }
    for (int alpha = 0; alpha < k; ++alpha) {
      double dy = 0.0;
      double deta = 0.0;
      for (int a = 0; a < l; ++a) {
        if (sv[a] == 0.0) continue;
        dy -= conn.gamma[alpha][a].evaluate(env) * sv[a];
        for (int beta = 0; beta < k; ++beta) deta -= sv[a] * dgamma[alpha][a][beta].evaluate(env) * eta[beta];
      }
      d[n + alpha] = dy;
      d[n + k + alpha] = deta;
    }
  };
  std::vector<double> state = e.x;
  state.insert(state.end(), e.y.begin(), e.y.end());
  state.insert(state.end(), ebar.begin(), ebar.end());
  OdeSolution sol = rk4_integrate(rhs, 0.0, span, state, cfg.h_step);

  LieTransport out;
  out.flow.u = sol.u;
  for (const auto& st : sol.states) {
    out.flow.points.push_back({{st.begin(), st.begin() + n}, {st.begin() + n, st.begin() + n + k}});
    out.eta.emplace_back(st.begin() + n + k, st.end());
  }
  return out;
}

std::vector<double> lie_transport_suspended(const Connection& conn, const SectionV& s, const EPoint& e,
                                            const std::vector<double>& ebar, double span,
                                            const TransportConfig& cfg) {
  const int k = conn.chart.k;
  const int l = conn.chart.l;
  const auto dgamma = fibre_jacobian(conn);
  TabulatedBase base = tabulate_base_flow(conn, s, e.x, span, cfg.h_step);

  // Autonomous system in (u, y, eta) with u' = 1: the parameter is a
  // coordinate of the pulled-back bundle.
  OdeRhs rhs = [&](double, const std::vector<double>& st, std::vector<double>& d) {
    std::vector<double> x, cv;
    base(st[0], x, cv);
    Env env = base_env(x);
    set_fibre(env, st.data() + 1, k);
    const double* eta = st.data() + 1 + k;
    d[0] = 1.0;
    for (int alpha = 0; alpha < k; ++alpha) {
      double dy = 0.0;
      double deta = 0.0;
      for (int a = 0; a < l; ++a) {
        if (cv[a] == 0.0) continue;
        dy -= conn.gamma[alpha][a].evaluate(env) * cv[a];
        for (int beta = 0; beta < k; ++beta) deta -= cv[a] * dgamma[alpha][a][beta].evaluate(env) * eta[beta];
      }
      d[1 + alpha] = dy;
      d[1 + k + alpha] = deta;
    }
  };
  std::vector<double> state{0.0};
  state.insert(state.end(), e.y.begin(), e.y.end());
  state.insert(state.end(), ebar.begin(), ebar.end());
  OdeSolution sol = rk4_integrate(rhs, 0.0, span, state, cfg.h_step);
  const auto& last = sol.states.back();
  return {last.begin() + 1 + k, last.end()};
}

DifferenceTransportReport verify_difference_transport(const Connection& conn, const AdmissibleCurve& c, const EPoint& e1,
                         const EPoint& e2, const TransportConfig& cfg, const SampleBox& box) {
  for (std::size_t i = 0; i < e1.x.size(); ++i) {
    if (std::abs(e1.x[i] - e2.x[i]) > 1e-9) throw TransportError("e1 and e2 lie in different fibres");
  }
  DifferenceTransportReport report;
  report.affine = is_affine(conn, box);
  AffineSplit linear = report.affine ? affine_split(conn, box) : linearisation_at_zero(conn);
  report.verdict = report.affine ? "affine" : "not affine";

  DiscreteCurve lift1 = horizontal_lift_curve(conn, c, e1, cfg);
  DiscreteCurve lift2 = horizontal_lift_curve(conn, c, e2, cfg);
  std::vector<double> ebar(e1.y.size());
  for (std::size_t a = 0; a < ebar.size(); ++a) ebar[a] = e1.y[a] - e2.y[a];
  OdeSolution eta = linear_transport_along(linear, curve_fn(c), c.a, c.b, ebar, cfg);

  double worst = 0.0;
  for (std::size_t j = 0; j < lift1.u.size(); ++j) {
    for (std::size_t a = 0; a < ebar.size(); ++a) {
      double r = std::abs(lift1.points[j].y[a] - lift2.points[j].y[a] - eta.states[j][a]);
      if (r > worst) {
        worst = r;
        report.witness_u = lift1.u[j];
      }
    }
  }
  Env witness{{"u", report.witness_u}};
  report.residuals.add("lift(e1) - lift(e2) - linear transport(e1 - e2)", worst, cfg.tol_report, witness);
  return report;
}

ResidualReport verify_lie_transport(const Connection& conn, const SectionV& s, const EPoint& e,
                            const std::vector<double>& ebar, double span, const TransportConfig& cfg,
                            const SampleBox& box) {
  ResidualReport report;
  LieTransport direct = lie_transport(conn, s, e, ebar, span, cfg);
  std::vector<double> suspended = lie_transport_suspended(conn, s, e, ebar, span, cfg);
  auto diff = [](const std::vector<double>& p, const std::vector<double>& q) {
    double m = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) m = std::max(m, std::abs(p[a] - q[a]));
    return m;
  };
  Env at_end{{"u", span}};
  report.add("direct vs suspended Lie transport", diff(direct.eta_end(), suspended), cfg.tol_report, at_end);
  if (is_affine(conn, box)) {
    AffineSplit split = affine_split(conn, box);
    TabulatedBase base = tabulate_base_flow(conn, s, e.x, span, cfg.h_step);
    OdeSolution lin = linear_transport_along(split, base, 0.0, span, ebar, cfg);
    report.add("Lie transport vs linear parallel transport", diff(direct.eta_end(), lin.states.back()),
               cfg.tol_report, at_end);
  }
  return report;
}

}  // namespace gconn
