// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gconn/cli.hpp"
#include "gconn/runner.hpp"
#include "test_support.hpp"

using namespace gconn;
using gconn::testing::scenario_path;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Tally {
 public:
  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += ", ";
    notes_ += s;
  }
  Outcome outcome() const { return {pass_, pass_ ? notes_ : failures_}; }

 private:
  bool pass_ = true;
  std::string failures_;
  std::string notes_;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

SampleBox halton64(const Scenario& sc, std::string_view salt) {
  SampleBox box = sample_box(sc, salt);
  box.count = 64;
  return box;
}

const std::vector<std::string> kAffine{"flat.json", "affine_line.json", "affine_const.json", "affine_plane.json",
                                       "affine_skew.json"};
const std::vector<std::string> kAlgebroid{"classical_oscillator.json", "classical_lagrangian.json", "exp_anchor.json",
                                          "plane_algebroid.json"};

Outcome bracket_identities() {
  Tally t;
  double worst = 0.0;
  for (const auto& file : kAffine) {
    Scenario sc = load_scenario(scenario_path(file));
    Connection conn = active_connection(sc, sample_box(sc, "brackets"));
    auto r = verify_bracket_formulas(conn, SectionV{section_ref(sc, "s", {"V"}).components},
                                     SectionE{section_ref(sc, "sigma", {"E"}).components},
                                     SectionEbar{section_ref(sc, "sigmabar", {"Ebar"}).components},
                                     halton64(sc, "brackets"), 1e-12);
    t.need(r.pass(), file + " residual " + sci(r.max()));
    worst = std::max(worst, r.max());
  }
  t.note(std::to_string(kAffine.size()) + " affine connections, max " + sci(worst) + " <= 1e-12");
  return t.outcome();
}

Outcome difference_transport() {
  Tally t;
  TransportConfig cfg{1e-3, 1e-8};
  double worst = 0.0;
  for (const auto& file : kAffine) {
    Scenario sc = load_scenario(scenario_path(file));
    const CheckDef& def = *std::find_if(sc.checks.begin(), sc.checks.end(),
                                        [](const CheckDef& c) { return c.type == "difference_transport"; });
    const auto& curve = curve_ref(sc, def.params["curve"]);
    t.need(curve.a == 0.0 && curve.b == 1.0, file + " span is not [0, 1]");
    auto r = verify_difference_transport(active_connection(sc, sample_box(sc, def.name)), curve,
                                         point_ref(sc, def.params["e1"]), point_ref(sc, def.params["e2"]), cfg,
                                         sample_box(sc, def.name));
    t.need(r.pass() && r.residuals.max() <= 1e-8, file + " residual " + sci(r.residuals.max()));
    worst = std::max(worst, r.residuals.max());
  }
  Scenario sq = load_scenario(scenario_path("nonaffine.json"));
  auto r = verify_difference_transport(active_connection(sq, sample_box(sq, "x")), curve_ref(sq, "line"),
                                       point_ref(sq, "e1"), point_ref(sq, "e2"), cfg, sample_box(sq, "x"));
  double defect = r.residuals.entries.front().value;
  t.need(!r.pass() && defect >= 1e-2 && r.verdict == "not affine", "y1^2 witness not rejected");
  t.note("affine max " + sci(worst) + " <= 1e-8, y1^2 witness FAIL with " + sci(defect) + " >= 1e-2");
  return t.outcome();
}

Outcome closed_forms() {
  Tally t;
  ChartSpec chart{1, 1, 1, false};
  AnchorSpec id{{{Expr::constant(1.0)}}};
  AdmissibleCurve line{{parse("u")}, {parse("1")}, 0.0, 1.0};
  auto conn = [&](const std::string& g) { return Connection{chart, id, {{parse(g)}}}; };
  const double gamma = 0.7;

  auto linear = [&](double h) {
    return std::abs(parallel_translate(conn("0.7*y1"), line, EPoint{{0.0}, {1.0}}, 1.0, {h, 1e-8}).y[0] -
                    std::exp(-gamma));
  };
  auto square = [&](double h) {
    return std::abs(parallel_translate(conn("y1^2"), line, EPoint{{0.0}, {1.0}}, 1.0, {h, 1e-8}).y[0] - 0.5);
  };
  auto variation = [&](double h) {
    auto lt = lie_transport(conn("y1^2"), SectionV{{parse("1")}}, EPoint{{0.0}, {1.0}}, {1.0}, 1.0, {h, 1e-8});
    return std::abs(lt.eta_end()[0] - 0.25);
  };
  struct Oracle {
    const char* name;
    std::function<double(double)> defect;
  };
  for (const auto& o : std::vector<Oracle>{{"exp(-gamma u)", linear}, {"1/(1+u)", square}, {"ebar (1+u)^-2", variation}}) {
    double d = o.defect(1e-3);
    double ratio = o.defect(0.1) / o.defect(0.05);
    t.need(d <= 1e-10, std::string(o.name) + " defect " + sci(d));
    t.need(ratio >= 12.0 && ratio <= 20.0, std::string(o.name) + " ratio " + std::to_string(ratio));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.1e ratio %.2f", o.name, d, ratio);
    t.note(buf);
  }
  return t.outcome();
}

Outcome parallelism() {
  Tally t;
  double horizontal = 0.0, vertical = 0.0;
  int count = 0;
  for (const auto& file : {"affine_plane.json", "affine_skew.json", "nonaffine.json", "nonaffine_plane.json"}) {
    Scenario sc = load_scenario(scenario_path(file));
    const CheckDef& def = *std::find_if(sc.checks.begin(), sc.checks.end(),
                                        [](const CheckDef& c) { return c.type == "parallelism"; });
    ParallelismInput in;
    in.s = SectionV{section_ref(sc, def.params["s"], {"V"}).components};
    in.e = point_ref(sc, def.params["point"]);
    in.sigma = SectionE{section_ref(sc, def.params["sigma"], {"E"}).components};
    in.ybar = SectionEbar{section_ref(sc, def.params["ybar"], {"Ebar"}).components};
    in.sigmabar = SectionEbar{section_ref(sc, def.params["sigmabar"], {"Ebar"}).components};
    in.span = def.params.value("span", 1.0);
    auto r = verify_parallelism(active_connection(sc, sample_box(sc, def.name)), in, TransportConfig{1e-3, 1e-8},
                                sample_box(sc, def.name), 1e-12);
    t.need(r.entries.size() == 3, std::string(file) + " incomplete");
    t.need(r.entries[0].value <= 1e-8, std::string(file) + " horizontal " + sci(r.entries[0].value));
    t.need(r.entries[1].value <= 1e-12 && r.entries[2].value <= 1e-12, std::string(file) + " vertical");
    horizontal = std::max(horizontal, r.entries[0].value);
    vertical = std::max({vertical, r.entries[1].value, r.entries[2].value});
    ++count;
  }
  t.note(std::to_string(count) + " connections, horizontal " + sci(horizontal) + " <= 1e-8, vertical " + sci(vertical) +
         " <= 1e-12");
  return t.outcome();
}

Outcome affine_reproduction() {
  Tally t;
  double worst = 0.0;
  for (const auto& file : kAffine) {
    Scenario sc = load_scenario(scenario_path(file));
    auto r = verify_affine_reproduction(active_connection(sc, sample_box(sc, "berwald")), sample_box(sc, "berwald"),
                                        1e-12);
    t.need(r.pass(), file + " " + sci(r.max()));
    worst = std::max(worst, r.max());
  }
  Scenario decay = load_scenario(scenario_path("linear_decay.json"));
  auto r = verify_affine_reproduction(active_connection(decay, sample_box(decay, "berwald")),
                                      sample_box(decay, "berwald"), 1e-12);
  t.need(r.pass(), "linear_decay.json");
  t.note(std::to_string(kAffine.size() + 1) + " affine connections, max " + sci(std::max(worst, r.max())) +
         " <= 1e-12");
  return t.outcome();
}

Outcome sode_suite() {
  Tally t;
  double worst = 0.0;
  for (const auto& file : kAlgebroid) {
    Scenario sc = load_scenario(scenario_path(file));
    SampleBox box = sample_box(sc, "sode");
    auto r = verify_sode_suite(*sc.algebroid, active_pseudo_sode(sc, box), box, 1e-10);
    t.need(r.pass(), file + " " + (r.worst() ? r.worst()->name : std::string()) + " " + sci(r.max()));
    worst = std::max(worst, r.max());
  }
  Scenario osc = load_scenario(scenario_path("classical_oscillator.json"));
  t.need(osc.pseudo_sode && osc.pseudo_sode->f[0].str() == "-y1", "oscillator force is not -y1");
  SampleBox box = sample_box(osc, "adapted_brackets");
  auto hv = verify_adapted_brackets(*osc.algebroid, sode_connection(*osc.algebroid, *osc.pseudo_sode), box, 1e-10);
  t.need(hv.pass(), "adapted brackets " + sci(hv.max()));
  t.note(std::to_string(kAlgebroid.size()) + " pseudo-SODEs, max " + sci(worst) + " <= 1e-10; adapted brackets for f=-y1 " +
         sci(hv.max()));
  return t.outcome();
}

Outcome direct_formulae() {
  Tally t;
  double worst = 0.0;
  for (const auto& file : kAlgebroid) {
    Scenario sc = load_scenario(scenario_path(file));
    SampleBox box = sample_box(sc, "direct");
    auto r = verify_direct_formulae(*sc.algebroid, active_connection(sc, box), box, 1e-9);
    bool both = false;
    for (const auto& e : r.entries) both = both || e.name.find("hat") != std::string::npos;
    t.need(both, file + " hat variant missing");
    t.need(r.pass(), file + " " + sci(r.max()));
    worst = std::max(worst, r.max());
  }
  t.note(std::to_string(kAlgebroid.size()) + " algebroid scenarios, both variants, max " + sci(worst) + " <= 1e-9");
  return t.outcome();
}

Outcome lagrangian() {
  Tally t;
  double worst = 0.0;
  for (const auto& file : {"classical_oscillator.json", "classical_lagrangian.json"}) {
    Scenario sc = load_scenario(scenario_path(file));
    SampleBox box = sample_box(sc, "lagrangian");
    PseudoSode f = lagrangian_sode(*sc.algebroid, *sc.lagrangian, box);
    auto r = verify_euler_lagrange(*sc.algebroid, *sc.lagrangian, f, point_ref(sc, "start"), 1.0,
                                   TransportConfig{1e-3, 1e-8}, 1e-6);
    t.need(r.pass(), std::string(file) + " " + sci(r.max()));
    worst = std::max(worst, r.max());
  }
  Scenario deg = load_scenario(scenario_path("degenerate_lagrangian.json"));
  bool raised = false;
  try {
    lagrangian_sode(*deg.algebroid, *deg.lagrangian, sample_box(deg, "lagrangian"));
  } catch (const RegularityError&) {
    raised = true;
  }
  t.need(raised, "L = y1 did not raise the regularity error");
  t.note("Euler-Lagrange max " + sci(worst) + " <= 1e-6, L = y1 raises the regularity error");
  return t.outcome();
}

Outcome expression_layer() {
  Tally t;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::vector<std::string> vars{"x1", "x2", "y1", "y2"};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Expr e = gconn::testing::random_tree(rng, vars, 4);
    Env at;
    for (const auto& v : vars) at.set(v, unit(rng));
    for (const auto& v : vars) {
      auto along = [&](double s) {
        Env moved = at;
        moved.set(v, s);
        return e.evaluate(moved);
      };
      worst = std::max(worst, std::abs(differentiate(e, v).evaluate(at) - gconn::testing::derivative_fd(along, *at.get(v))));
    }
  }
  t.need(worst <= 1e-6, "derivative defect " + sci(worst));

  int corpus = 0;
  for (const auto& file : gconn::testing::scenario_files()) {
    Scenario sc = load_scenario(file);
    for (const auto& [pointer, text] : sc.expressions) {
      VariableScope any{-1, -1, true, {"gamma"}};
      std::string printed = parse(text, any).str();
      Expr again = parse(printed, any);
      t.need(again.str() == printed && again.equals(parse(text, any)), file + pointer);
      ++corpus;
    }
  }
  t.note("100 random trees, max " + sci(worst) + " <= 1e-6; " + std::to_string(corpus) + " corpus expressions stable");
  return t.outcome();
}

Outcome determinism() {
  Tally t;
  int files = 0;
  for (const auto& file : gconn::testing::scenario_files()) {
    std::vector<std::string> args{"check", "--scenario", file, "--seed", "42", "--format", "json"};
    std::ostringstream a, b, err;
    run_cli(args, a, err);
    run_cli(args, b, err);
    t.need(!a.str().empty() && a.str() == b.str(), file);
    ++files;
  }
  t.note(std::to_string(files) + " scenarios byte-identical across runs");
  return t.outcome();
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"1  bracket identities for affine connections", bracket_identities},
      {"2  transport of differences, two-sided", difference_transport},
      {"3  closed-form transport and fourth-order convergence", closed_forms},
      {"4  horizontal and vertical parallelism", parallelism},
      {"5  Berwald table reproduces the affine split", affine_reproduction},
      {"6  pseudo-SODE identities and adapted brackets", sode_suite},
      {"7  direct bracket formulae vs coefficient tables", direct_formulae},
      {"8  Euler-Lagrange oracle and regularity", lagrangian},
      {"9  expression derivatives and parse/print fixed point", expression_layer},
      {"10 deterministic reports", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", c.label, o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
