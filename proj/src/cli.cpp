#include "gconn/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gconn/runner.hpp"

namespace gconn {

namespace {

struct Options {
  std::string scenario;
  std::string checks = "all";
  std::optional<double> step;
  std::optional<double> tol;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::string format = "text";
  std::string out_path;
  std::string curve;
  std::string point;
  std::string variant = "both";
  std::string report_path;
};

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> names;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) names.push_back(item);
  }
  return names;
}

RunOptions run_options(const Options& o) {
  RunOptions r;
  if (o.checks != "all") r.only = split_names(o.checks);
  r.step = o.step;
  r.tol = o.tol;
  r.samples = o.samples;
  r.seed = o.seed;
  return r;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out_path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + o.out_path + "'");
  file << text;
}

std::string render(const Options& o, const Report& r) {
  return o.format == "json" ? render_json(r) : render_text(r);
}

int cmd_check(const Options& o, std::ostream& out, bool validate_only) {
  Scenario sc = load_scenario(o.scenario);
  Report report;
  if (validate_only) {
    Scenario base = apply_overrides(sc, run_options(o));
    report.scenario = base.name;
    report.seed = base.numeric.seed;
    CheckDef def;
    def.name = "validate";
    def.type = "validate";
    report.checks.push_back(run_check(base, def));
  } else {
    report = run_scenario(sc, run_options(o));
  }
  emit(o, render(o, report), out);
  return report.exit_code();
}

int cmd_transport(const Options& o, std::ostream& out) {
  Scenario sc = apply_overrides(load_scenario(o.scenario), run_options(o));
  std::string curve = o.curve;
  std::string point = o.point;
  if (curve.empty() || point.empty()) {
    if (sc.transports.empty()) throw ConfigError("no transport requested: pass --curve and --point");
    if (curve.empty()) curve = sc.transports.front().curve;
    if (point.empty()) point = sc.transports.front().point;
  }
  Connection conn = active_connection(sc, sample_box(sc, "transport"));
  TransportConfig cfg{sc.numeric.h_step, sc.numeric.tol};
  DiscreteCurve lift = horizontal_lift_curve(conn, curve_ref(sc, curve), point_ref(sc, point), cfg);
  std::ostringstream csv;
  lift.write_csv(csv);
  emit(o, csv.str(), out);
  return 0;
}

int cmd_berwald(const Options& o, std::ostream& out) {
  Scenario sc = apply_overrides(load_scenario(o.scenario), run_options(o));
  Connection conn = active_connection(sc, sample_box(sc, "berwald"));
  std::vector<BerwaldVariant> variants;
  if (o.variant == "both") {
    variants = {BerwaldVariant::Plain, BerwaldVariant::Hat};
  } else {
    variants = {parse_variant(o.variant)};
  }
  if (o.format == "json") {
    nlohmann::json j = nlohmann::json::object();
    for (auto v : variants) j[to_string(v)] = berwald_table(conn, v).to_json();
    emit(o, j.dump(2) + "\n", out);
  } else {
    std::string text;
    for (auto v : variants) text += berwald_table(conn, v).to_text();
    emit(o, text, out);
  }
  return 0;
}

int cmd_sode(const Options& o, std::ostream& out) {
  Scenario sc = apply_overrides(load_scenario(o.scenario), run_options(o));
  if (!sc.algebroid) throw ConfigError("the sode command needs an algebroid structure in the scenario");
  PseudoSode f = active_pseudo_sode(sc, sample_box(sc, "sode"));
  Connection conn = sode_connection(*sc.algebroid, f);
  const auto& chart = sc.chart;
  if (o.format == "json") {
    nlohmann::json j;
    j["f"] = nlohmann::json::array();
    for (const auto& e : f.f) j["f"].push_back(e.str());
    nlohmann::json gamma = nlohmann::json::array();
    for (int alpha = 0; alpha < chart.k; ++alpha) {
      for (int a = 0; a < chart.l; ++a) {
        gamma.push_back({{"alpha", alpha + 1}, {"a", chart.v_label(a)}, {"expr", conn.gamma[alpha][a].str()}});
      }
    }
    j["connection"] = gamma;
    emit(o, j.dump(2) + "\n", out);
  } else {
    std::ostringstream text;
    for (int alpha = 0; alpha < chart.k; ++alpha) text << "f^" << alpha + 1 << " = " << f.f[alpha].str() << '\n';
    for (int alpha = 0; alpha < chart.k; ++alpha) {
      for (int a = 0; a < chart.l; ++a) {
        text << "Gamma^" << alpha + 1 << "_" << chart.v_label(a) << " = " << conn.gamma[alpha][a].str() << '\n';
      }
    }
    emit(o, text.str(), out);
  }
  return 0;
}

int cmd_report(const Options& o, std::ostream& out) {
  std::ifstream in(o.report_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open report '" + o.report_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError(std::string("invalid JSON in report: ") + err.what());
  }
  Report r = report_from_json(j);
  emit(o, render(o, r), out);
  return r.exit_code();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalised connections on affine bundles: transport, Berwald linearisation, algebroid checks"};
  app.name("gconn");
  app.require_subcommand(1);
  Options o;

  auto add_scenario_flags = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file")->required();
    sub->add_option("--step", o.step, "RK4 step size");
    sub->add_option("--tol", o.tol, "tolerance for transport checks");
    sub->add_option("--samples", o.samples, "number of sample points");
    sub->add_option("--seed", o.seed, "sampling seed");
    sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--out", o.out_path, "write output to this file");
  };

  auto* validate = app.add_subcommand("validate", "check chart, anchor, curves and algebroid axioms");
  add_scenario_flags(validate);
  auto* check = app.add_subcommand("check", "run the checks listed in a scenario");
  add_scenario_flags(check);
  check->add_option("--check", o.checks, "comma-separated check names, or all");
  auto* transport = app.add_subcommand("transport", "horizontal lift of a curve as CSV");
  add_scenario_flags(transport);
  transport->add_option("--curve", o.curve, "curve name");
  transport->add_option("--point", o.point, "initial point name");
  auto* berwald = app.add_subcommand("berwald", "Berwald coefficient tables");
  add_scenario_flags(berwald);
  berwald->add_option("--variant", o.variant, "plain, hat or both")->check(CLI::IsMember({"plain", "hat", "both"}));
  auto* sode = app.add_subcommand("sode", "pseudo-SODE force and connection coefficients");
  add_scenario_flags(sode);
  auto* report = app.add_subcommand("report", "re-render a saved JSON report");
  report->add_option("file", o.report_path, "report JSON file")->required();
  report->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "text"}));
  report->add_option("--out", o.out_path, "write output to this file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "gconn: " << e.what() << '\n';
    return 2;
  }

  try {
    if (validate->parsed()) return cmd_check(o, out, true);
    if (check->parsed()) return cmd_check(o, out, false);
    if (transport->parsed()) return cmd_transport(o, out);
    if (berwald->parsed()) return cmd_berwald(o, out);
    if (sode->parsed()) return cmd_sode(o, out);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const ConfigError& e) {
    err << "gconn: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ExprError& e) {
    err << "gconn: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "gconn: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gconn
