#include "gconn/runner.hpp"

#include <chrono>
#include <future>

namespace gconn {

namespace {

std::vector<std::string> exercises_for(const std::string& type) {
  static const std::map<std::string, std::vector<std::string>> table{
      {"validate", {"chart dimensions and variable discipline", "connection shape", "curve admissibility"}},
      {"admissible", {"admissibility dc_M/du = rho(c_M) c"}},
      {"affine", {"second fibre derivatives of the connection coefficients"}},
      {"difference_transport", {"horizontal lift ODE", "linear parallel transport", "affineness as transport of differences"}},
      {"lie_transport", {"Lie transport by the fibre variational equation", "suspension with the parameter adjoined",
                 "linear parallel transport along the base flow (affine case)"}},
      {"brackets", {"bracket [hs, v sigma] and [hs, v sigmabar]", "coordinate formulas for nabla and nabla-bar",
                 "h(sigma, s) = T sigma(rho s) - [hs, v sigma]"}},
      {"berwald", {"Berwald coefficient table", "affine split"}},
      {"parallelism", {"Leibniz extension of the Berwald table", "Lie transport along h(s)",
                   "vertical translation in pi*E (plain) and pi*Ebar (hat)"}},
      {"algebroid", {"antisymmetry", "anchor compatibility", "Jacobi identity on basis sections"}},
      {"sode", {"vertical endomorphism", "d_Gamma S eigen-relations", "horizontal projector",
                "pseudo-SODE connection coefficients"}},
      {"adapted_brackets", {"[H_a, V_alpha] and [H_a, H_b] in the adapted basis"}},
      {"direct", {"bracket formulae for the Berwald derivatives", "Leibniz extension of the Berwald table"}},
      {"lagrangian", {"Lagrangian pseudo-SODE force", "Euler-Lagrange equations along integrated trajectories"}},
  };
  auto it = table.find(type);
  return it == table.end() ? std::vector<std::string>{} : it->second;
}

std::vector<double> vector_param(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

double span_param(const CheckDef& def) {
  return def.params.contains("span") ? def.params["span"].get<double>() : 1.0;
}

std::string str_param(const CheckDef& def, const char* key) { return def.params.at(key).get<std::string>(); }

std::vector<std::string> chart_errors(const Scenario& sc) {
  auto errors = validate_chart(sc.chart, sc.anchor);
  if (sc.connection) {
    Connection conn{sc.chart, sc.anchor, *sc.connection};
    for (auto& e : conn.validate()) {
      if (std::find(errors.begin(), errors.end(), e) == errors.end()) errors.push_back(e);
    }
  }
  return errors;
}

void run_validate(const Scenario& sc, const SampleBox& box, CheckResult& out) {
  auto errors = chart_errors(sc);
  double tol = 0.0;
  out.residuals.push_back({"chart and coefficient errors", double(errors.size()), tol, {}});
  for (const auto& e : errors) {
    if (!out.message.empty()) out.message += "; ";
    out.message += e;
  }
  if (errors.empty()) {
    for (const auto& [name, curve] : sc.curves) {
      auto r = check_admissible(curve, sc.anchor);
      out.residuals.push_back({"curve " + name + " admissibility", r.max_residual, r.tolerance,
                               Env{{"u", r.witness_u}}});
    }
    if (sc.algebroid) {
      for (auto& r : validate_algebroid(*sc.algebroid, box).entries) {
        r.name = "algebroid " + r.name;
        out.residuals.push_back(std::move(r));
      }
    }
  }
}

void dispatch(const Scenario& sc, const CheckDef& def, CheckResult& out) {
  const SampleBox box = sample_box(sc, def.name);
  TransportConfig cfg{sc.numeric.h_step, sc.numeric.tol};
  const std::string& type = def.type;

  if (type == "validate") {
    run_validate(sc, box, out);
    return;
  }
  auto errors = chart_errors(sc);
  if (!errors.empty()) throw ConfigError("chart is invalid: " + errors.front());

  auto take = [&](const ResidualReport& r) {
    out.residuals.insert(out.residuals.end(), r.entries.begin(), r.entries.end());
  };

  if (type == "admissible") {
    auto r = check_admissible(curve_ref(sc, str_param(def, "curve")), sc.anchor);
    out.residuals.push_back({"dc_M/du - rho(c_M) c", r.max_residual, r.tolerance, Env{{"u", r.witness_u}}});
    return;
  }
  if (type == "algebroid") {
    take(validate_algebroid(*sc.algebroid, box));
    return;
  }
  if (type == "sode") {
    take(verify_sode_suite(*sc.algebroid, active_pseudo_sode(sc, box), box));
    return;
  }
  if (type == "lagrangian") {
    PseudoSode f = lagrangian_sode(*sc.algebroid, *sc.lagrangian, box);
    take(verify_euler_lagrange(*sc.algebroid, *sc.lagrangian, f, point_ref(sc, str_param(def, "point")),
                               span_param(def), cfg));
    return;
  }

  Connection conn = active_connection(sc, box);
  if (type == "affine") {
    bool affine = is_affine(conn, box);
    out.verdict = affine ? "affine" : "not affine";
    double worst = 0.0;
    Env witness;
    auto points = box.points();
    for (const auto& row : conn.gamma) {
      for (const auto& g : row) {
        for (int b = 0; b < conn.chart.k; ++b) {
          Expr d1 = differentiate(g, ChartSpec::y(b));
          for (int c = b; c < conn.chart.k; ++c) {
            Env w;
            double m = max_abs(differentiate(d1, ChartSpec::y(c)), points, &w);
            if (m > worst) {
              worst = m;
              witness = w;
            }
          }
        }
      }
    }
    out.residuals.push_back({"second fibre derivatives", worst, 1e-10, witness});
  } else if (type == "difference_transport") {
    auto r = verify_difference_transport(conn, curve_ref(sc, str_param(def, "curve")), point_ref(sc, str_param(def, "e1")),
                          point_ref(sc, str_param(def, "e2")), cfg, box);
    out.verdict = r.verdict;
    take(r.residuals);
    if (!r.affine) out.residuals.push_back({"affine", 1.0, 0.0, {}});
  } else if (type == "lie_transport") {
    SectionV s{section_ref(sc, str_param(def, "s"), {"V"}).components};
    take(verify_lie_transport(conn, s, point_ref(sc, str_param(def, "point")), vector_param(def.params["ebar"]),
                      span_param(def), cfg, box));
  } else if (type == "brackets") {
    SectionV s{section_ref(sc, str_param(def, "s"), {"V"}).components};
    SectionE sigma{section_ref(sc, str_param(def, "sigma"), {"E"}).components};
    SectionEbar sigmabar{section_ref(sc, str_param(def, "sigmabar"), {"Ebar"}).components};
    take(verify_bracket_formulas(conn, s, sigma, sigmabar, box));
    take(verify_horizontal_from_bracket(conn, s, sigma, sigmabar, box));
  } else if (type == "berwald") {
    take(verify_affine_reproduction(conn, box));
  } else if (type == "parallelism") {
    ParallelismInput in;
    in.s = SectionV{section_ref(sc, str_param(def, "s"), {"V"}).components};
    in.e = point_ref(sc, str_param(def, "point"));
    in.sigma = SectionE{section_ref(sc, str_param(def, "sigma"), {"E"}).components};
    in.ybar = SectionEbar{section_ref(sc, str_param(def, "ybar"), {"Ebar"}).components};
    in.sigmabar = SectionEbar{section_ref(sc, str_param(def, "sigmabar"), {"Ebar"}).components};
    in.span = span_param(def);
    take(verify_parallelism(conn, in, cfg, box));
  } else if (type == "adapted_brackets") {
    take(verify_adapted_brackets(*sc.algebroid, conn, box));
  } else if (type == "direct") {
    take(verify_direct_formulae(*sc.algebroid, conn, box));
  } else {
    throw ConfigError("unknown check type " + type);
  }
}

}  // namespace

Scenario apply_overrides(Scenario sc, const RunOptions& opts) {
  if (opts.step) {
    if (!(*opts.step > 0.0)) throw ConfigError("--step must be positive");
    sc.numeric.h_step = *opts.step;
  }
  if (opts.tol) {
    if (!(*opts.tol > 0.0)) throw ConfigError("--tol must be positive");
    sc.numeric.tol = *opts.tol;
  }
  if (opts.samples) {
    if (*opts.samples < 1) throw ConfigError("--samples must be at least 1");
    sc.numeric.samples = *opts.samples;
  }
  if (opts.seed) sc.numeric.seed = *opts.seed;
  return sc;
}

CheckResult run_check(const Scenario& sc, const CheckDef& def) {
  CheckResult out;
  out.name = def.name;
  out.type = def.type;
  out.expect = def.expect;
  out.exercises = exercises_for(def.type);
  auto start = std::chrono::steady_clock::now();
  try {
    dispatch(sc, def, out);
    bool pass = true;
    for (const auto& r : out.residuals) pass = pass && r.pass();
    out.status = pass ? "pass" : "fail";
  } catch (const NotAffineError& err) {
    out.status = "error";
    out.verdict = "not affine";
    out.message = err.what();
  } catch (const std::exception& err) {
    out.status = "error";
    out.message = err.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Report run_scenario(const Scenario& input, const RunOptions& opts) {
  Scenario sc = apply_overrides(input, opts);
  std::vector<const CheckDef*> selected;
  if (opts.only.empty()) {
    for (const auto& c : sc.checks) selected.push_back(&c);
  } else {
    for (const auto& name : opts.only) {
      auto it = std::find_if(sc.checks.begin(), sc.checks.end(), [&](const CheckDef& c) { return c.name == name; });
      if (it == sc.checks.end()) throw ConfigError("scenario has no check named '" + name + "'");
      selected.push_back(&*it);
    }
  }

  Report report;
  report.scenario = sc.name;
  report.seed = sc.numeric.seed;
  if (opts.parallel && selected.size() > 1) {
    std::vector<std::future<CheckResult>> futures;
    for (const auto* def : selected) {
      futures.push_back(std::async(std::launch::async, [&sc, def] { return run_check(sc, *def); }));
    }
    for (auto& f : futures) report.checks.push_back(f.get());
  } else {
    for (const auto* def : selected) report.checks.push_back(run_check(sc, *def));
  }
  return report;
}

}  // namespace gconn
