#include "gconn/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace gconn {

using nlohmann::json;

namespace {

std::string escape_key(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + escape_key(key); }
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

enum class RefKind { Curve, Point, SectionV, SectionE, SectionEbar, SectionAny, Number, Vector };

struct RefSpec {
  const char* key;
  RefKind kind;
  bool required;
};

const std::map<std::string, std::vector<RefSpec>, std::less<>>& check_schema() {
  static const std::map<std::string, std::vector<RefSpec>, std::less<>> schema{
      {"validate", {}},
      {"admissible", {{"curve", RefKind::Curve, true}}},
      {"affine", {}},
      {"difference_transport", {{"curve", RefKind::Curve, true}, {"e1", RefKind::Point, true}, {"e2", RefKind::Point, true}}},
      {"lie_transport",
       {{"s", RefKind::SectionV, true},
        {"point", RefKind::Point, true},
        {"ebar", RefKind::Vector, true},
        {"span", RefKind::Number, false}}},
      {"brackets",
       {{"s", RefKind::SectionV, true}, {"sigma", RefKind::SectionE, true}, {"sigmabar", RefKind::SectionEbar, true}}},
      {"berwald", {}},
      {"parallelism",
       {{"s", RefKind::SectionV, true},
        {"point", RefKind::Point, true},
        {"sigma", RefKind::SectionE, true},
        {"ybar", RefKind::SectionEbar, true},
        {"sigmabar", RefKind::SectionEbar, true},
        {"span", RefKind::Number, false}}},
      {"algebroid", {}},
      {"sode", {}},
      {"adapted_brackets", {}},
      {"direct", {}},
      {"lagrangian", {{"point", RefKind::Point, true}, {"span", RefKind::Number, false}}},
  };
  return schema;
}

const std::set<std::string, std::less<>> kNeedsAlgebroid{"algebroid", "sode", "adapted_brackets", "direct", "lagrangian"};

class Loader {
 public:
  explicit Loader(const json& doc) : doc_(doc) {}

  Scenario run() {
    if (!doc_.is_object()) throw SchemaError("", "scenario must be a JSON object");
    sc_.name = doc_.contains("name") ? string_at(doc_["name"], "/name") : "unnamed";
    load_chart();
    load_parameters();
    load_anchor();
    if (doc_.contains("connection")) load_connection();
    if (doc_.contains("algebroid")) load_algebroid();
    if (doc_.contains("pseudo_sode")) load_pseudo_sode();
    if (doc_.contains("lagrangian")) sc_.lagrangian = LagrangianSpec{expr(doc_["lagrangian"], "/lagrangian", full())};
    load_active();
    if (doc_.contains("curves")) load_curves();
    if (doc_.contains("sections")) load_sections();
    if (doc_.contains("points")) load_points();
    if (doc_.contains("numeric")) load_numeric();
    if (doc_.contains("checks")) load_checks();
    if (doc_.contains("transports")) load_transports();
    return std::move(sc_);
  }

 private:
  const json& doc_;
  Scenario sc_;
  std::set<std::string, std::less<>> param_names_;
  std::map<std::string, Expr, std::less<>> param_values_;

  const json& need(const json& obj, const std::string& key, const std::string& ptr) {
    if (!obj.is_object()) throw SchemaError(ptr, "expected an object");
    if (!obj.contains(key)) throw SchemaError(child(ptr, key), "missing required field");
    return obj[key];
  }

  std::string string_at(const json& node, const std::string& ptr) {
    if (!node.is_string()) throw SchemaError(ptr, "expected a string");
    return node.get<std::string>();
  }

  double number_at(const json& node, const std::string& ptr) {
    if (!node.is_number()) throw SchemaError(ptr, "expected a number");
    return node.get<double>();
  }

  int int_at(const json& node, const std::string& ptr, int min) {
    if (!node.is_number_integer()) throw SchemaError(ptr, "expected an integer");
    int v = node.get<int>();
    if (v < min) throw SchemaError(ptr, "must be at least " + std::to_string(min));
    return v;
  }

  const json& array_at(const json& node, const std::string& ptr, std::optional<std::size_t> size = {}) {
    if (!node.is_array()) throw SchemaError(ptr, "expected an array");
    if (size && node.size() != *size) {
      throw SchemaError(ptr, "expected " + std::to_string(*size) + " entries, got " + std::to_string(node.size()));
    }
    return node;
  }

  std::vector<double> numbers_at(const json& node, const std::string& ptr, std::size_t size) {
    array_at(node, ptr, size);
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number_at(node[i], child(ptr, i)));
    return out;
  }

  VariableScope scope(int n, int k, bool allow_u) const {
    VariableScope s;
    s.n = n;
    s.k = k;
    s.allow_u = allow_u;
    for (const auto& p : param_names_) s.parameters.insert(p);
    return s;
  }
  VariableScope full() const { return scope(sc_.chart.n, sc_.chart.k, false); }
  VariableScope basic() const { return scope(sc_.chart.n, 0, false); }
  VariableScope curve_scope() const { return scope(0, 0, true); }

  Expr expr(const json& node, const std::string& ptr, const VariableScope& s) {
    std::string text;
    if (node.is_number()) {
      text = format_number(node.get<double>());
    } else if (node.is_string()) {
      text = node.get<std::string>();
    } else {
      throw SchemaError(ptr, "expected an expression string");
    }
    try {
      Expr e = parse(text, s);
      if (node.is_string()) sc_.expressions.emplace_back(ptr, text);
      return param_values_.empty() ? e : substitute(e, param_values_);
    } catch (const ParseError& err) {
      throw SchemaError(ptr, err.what());
    }
  }

  std::vector<Expr> exprs(const json& node, const std::string& ptr, std::size_t size, const VariableScope& s) {
    array_at(node, ptr, size);
    std::vector<Expr> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(expr(node[i], child(ptr, i), s));
    return out;
  }

  void load_chart() {
    const json& c = need(doc_, "chart", "");
    auto& ch = sc_.chart;
    ch.n = int_at(need(c, "n", "/chart"), "/chart/n", 1);
    ch.k = int_at(need(c, "k", "/chart"), "/chart/k", 1);
    if (c.contains("anchored_in_E")) {
      if (!c["anchored_in_E"].is_boolean()) throw SchemaError("/chart/anchored_in_E", "expected a boolean");
      ch.anchored_in_E = c["anchored_in_E"].get<bool>();
    }
    if (c.contains("l")) {
      ch.l = int_at(c["l"], "/chart/l", 1);
    } else if (ch.anchored_in_E) {
      ch.l = ch.k + 1;
    } else {
      throw SchemaError("/chart/l", "missing required field");
    }
    if (ch.anchored_in_E && ch.l != ch.k + 1) throw SchemaError("/chart/l", "anchored_in_E requires l = k + 1");
  }

  void load_parameters() {
    if (!doc_.contains("parameters")) return;
    const json& p = doc_["parameters"];
    if (!p.is_object()) throw SchemaError("/parameters", "expected an object");
    for (const auto& [name, value] : p.items()) {
      std::string ptr = child("/parameters", name);
      bool ident = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
      for (char ch : name) ident = ident && (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_');
      if (!ident) throw SchemaError(ptr, "parameter name is not an identifier");
      VariableScope chart_vars = scope(-1, -1, true);
      chart_vars.parameters.clear();
      if (chart_vars.accepts(name) || name == "sin" || name == "cos" || name == "exp" || name == "log" ||
          name == "sqrt") {
        throw SchemaError(ptr, "parameter name clashes with a reserved name");
      }
      param_names_.insert(name);
      param_values_[name] = Expr::constant(number_at(value, ptr));
    }
  }

  void load_anchor() {
    const json& a = need(doc_, "anchor", "");
    array_at(a, "/anchor", std::size_t(sc_.chart.n));
    sc_.anchor.rho.clear();
    for (int i = 0; i < sc_.chart.n; ++i) {
      // Fibre variables are accepted here so that validation can name them.
      sc_.anchor.rho.push_back(exprs(a[i], child("/anchor", i), std::size_t(sc_.chart.l), full()));
    }
  }

  void load_connection() {
    const json& c = doc_["connection"];
    array_at(c, "/connection", std::size_t(sc_.chart.k));
    std::vector<std::vector<Expr>> gamma;
    for (int alpha = 0; alpha < sc_.chart.k; ++alpha) {
      gamma.push_back(exprs(c[alpha], child("/connection", alpha), std::size_t(sc_.chart.l), full()));
    }
    sc_.connection = std::move(gamma);
  }

  int index_at(const json& obj, const char* key, const std::string& ptr, int lo, int hi) {
    const json& v = need(obj, key, ptr);
    int i = int_at(v, child(ptr, key), lo);
    if (i > hi) throw SchemaError(child(ptr, key), "index out of range 1.." + std::to_string(hi));
    return i;
  }

  void load_algebroid() {
    if (!sc_.chart.anchored_in_E) throw SchemaError("/algebroid", "an algebroid needs chart.anchored_in_E");
    const json& a = doc_["algebroid"];
    if (!a.is_object()) throw SchemaError("/algebroid", "expected an object");
    const int k = sc_.chart.k;
    AlgebroidSpec spec = AlgebroidSpec::abelian(sc_.chart, sc_.anchor);
    std::vector<std::vector<std::vector<bool>>> given(k, std::vector<std::vector<bool>>(k, std::vector<bool>(k)));
    if (a.contains("C")) {
      array_at(a["C"], "/algebroid/C");
      for (std::size_t j = 0; j < a["C"].size(); ++j) {
        std::string ptr = child("/algebroid/C", j);
        const json& entry = a["C"][j];
        int g = index_at(entry, "gamma", ptr, 1, k) - 1;
        int al = index_at(entry, "alpha", ptr, 1, k) - 1;
        int be = index_at(entry, "beta", ptr, 1, k) - 1;
        if (al == be) throw SchemaError(ptr, "diagonal structure function C^g_{aa} must vanish");
        if (given[g][al][be]) throw SchemaError(ptr, "duplicate structure function entry");
        spec.C[g][al][be] = expr(need(entry, "expr", ptr), child(ptr, "expr"), basic());
        given[g][al][be] = true;
      }
      // Missing antisymmetric partners are filled in.
      for (int g = 0; g < k; ++g) {
        for (int al = 0; al < k; ++al) {
          for (int be = 0; be < k; ++be) {
            if (given[g][al][be] && !given[g][be][al]) spec.C[g][be][al] = -spec.C[g][al][be];
          }
        }
      }
    }
    if (a.contains("C0")) {
      array_at(a["C0"], "/algebroid/C0");
      for (std::size_t j = 0; j < a["C0"].size(); ++j) {
        std::string ptr = child("/algebroid/C0", j);
        const json& entry = a["C0"][j];
        int g = index_at(entry, "gamma", ptr, 1, k) - 1;
        int be = index_at(entry, "beta", ptr, 1, k) - 1;
        spec.C0[g][be] = expr(need(entry, "expr", ptr), child(ptr, "expr"), basic());
      }
    }
    sc_.algebroid = std::move(spec);
  }

  void load_pseudo_sode() {
    sc_.pseudo_sode = PseudoSode{exprs(doc_["pseudo_sode"], "/pseudo_sode", std::size_t(sc_.chart.k), full())};
  }

  void load_active() {
    std::vector<std::string> present;
    if (sc_.connection) present.push_back("connection");
    if (sc_.pseudo_sode) present.push_back("pseudo_sode");
    if (sc_.lagrangian) present.push_back("lagrangian");
    if (doc_.contains("active")) {
      sc_.active = string_at(doc_["active"], "/active");
      if (std::find(present.begin(), present.end(), sc_.active) == present.end()) {
        throw SchemaError("/active", "names '" + sc_.active + "' which is not present in the scenario");
      }
    } else if (present.size() > 1) {
      throw SchemaError("/active", "several connection sources present; choose one");
    } else if (present.size() == 1) {
      sc_.active = present[0];
    }
    if ((sc_.active == "pseudo_sode" || sc_.active == "lagrangian") && !sc_.algebroid) {
      throw SchemaError("/algebroid", "a " + sc_.active + " connection source needs an algebroid structure");
    }
  }

  void load_curves() {
    const json& cs = doc_["curves"];
    if (!cs.is_object()) throw SchemaError("/curves", "expected an object");
    for (const auto& [name, c] : cs.items()) {
      std::string ptr = child("/curves", name);
      AdmissibleCurve curve;
      curve.cM = exprs(need(c, "cM", ptr), child(ptr, "cM"), std::size_t(sc_.chart.n), curve_scope());
      curve.c = exprs(need(c, "c", ptr), child(ptr, "c"), std::size_t(sc_.chart.l), curve_scope());
      if (c.contains("domain")) {
        auto d = numbers_at(c["domain"], child(ptr, "domain"), 2);
        if (!(d[1] > d[0])) throw SchemaError(child(ptr, "domain"), "domain must satisfy a < b");
        curve.a = d[0];
        curve.b = d[1];
      }
      sc_.curves[name] = std::move(curve);
    }
  }

  void load_sections() {
    const json& ss = doc_["sections"];
    if (!ss.is_object()) throw SchemaError("/sections", "expected an object");
    for (const auto& [name, s] : ss.items()) {
      std::string ptr = child("/sections", name);
      SectionDef def;
      def.kind = string_at(need(s, "kind", ptr), child(ptr, "kind"));
      std::string cptr = child(ptr, "components");
      if (def.kind == "V") {
        def.components = exprs(need(s, "components", ptr), cptr, std::size_t(sc_.chart.l), basic());
      } else if (def.kind == "E" || def.kind == "Ebar") {
        def.components = exprs(need(s, "components", ptr), cptr, std::size_t(sc_.chart.k), basic());
      } else if (def.kind == "tilde") {
        def.X0 = expr(need(s, "X0", ptr), child(ptr, "X0"), full());
        def.components = exprs(need(s, "components", ptr), cptr, std::size_t(sc_.chart.k), full());
      } else {
        throw SchemaError(child(ptr, "kind"), "unknown section kind '" + def.kind + "' (expected V, E, Ebar, tilde)");
      }
      sc_.sections[name] = std::move(def);
    }
  }

  void load_points() {
    const json& ps = doc_["points"];
    if (!ps.is_object()) throw SchemaError("/points", "expected an object");
    for (const auto& [name, p] : ps.items()) {
      std::string ptr = child("/points", name);
      EPoint e;
      e.x = numbers_at(need(p, "x", ptr), child(ptr, "x"), std::size_t(sc_.chart.n));
      e.y = numbers_at(need(p, "y", ptr), child(ptr, "y"), std::size_t(sc_.chart.k));
      sc_.points[name] = std::move(e);
    }
  }

  void load_numeric() {
    const json& nm = doc_["numeric"];
    if (!nm.is_object()) throw SchemaError("/numeric", "expected an object");
    auto& cfg = sc_.numeric;
    if (nm.contains("h_step")) {
      cfg.h_step = number_at(nm["h_step"], "/numeric/h_step");
      if (!(cfg.h_step > 0.0)) throw SchemaError("/numeric/h_step", "must be positive");
    }
    if (nm.contains("tol")) cfg.tol = number_at(nm["tol"], "/numeric/tol");
    if (nm.contains("samples")) cfg.samples = int_at(nm["samples"], "/numeric/samples", 1);
    if (nm.contains("seed")) {
      if (!nm["seed"].is_number_unsigned()) throw SchemaError("/numeric/seed", "expected a non-negative integer");
      cfg.seed = nm["seed"].get<std::uint64_t>();
    }
    if (nm.contains("box")) {
      const json& b = nm["box"];
      if (!b.is_object()) throw SchemaError("/numeric/box", "expected an object");
      if (b.contains("lo")) cfg.box.lo = number_at(b["lo"], "/numeric/box/lo");
      if (b.contains("hi")) cfg.box.hi = number_at(b["hi"], "/numeric/box/hi");
      if (b.contains("vars")) {
        if (!b["vars"].is_object()) throw SchemaError("/numeric/box/vars", "expected an object");
        for (const auto& [var, range] : b["vars"].items()) {
          std::string ptr = child("/numeric/box/vars", var);
          if (!full().accepts(var) || param_names_.count(var)) throw SchemaError(ptr, "not a chart variable");
          auto r = numbers_at(range, ptr, 2);
          cfg.vars[var] = {r[0], r[1]};
        }
      }
    }
  }

  void check_ref(const CheckDef& c, const RefSpec& ref) {
    std::string ptr = child(c.pointer, ref.key);
    if (!c.params.contains(ref.key)) {
      if (ref.required) throw SchemaError(ptr, "missing required field for check type " + c.type);
      return;
    }
    const json& v = c.params[ref.key];
    auto name = [&] { return string_at(v, ptr); };
    auto section_kind = [&](std::initializer_list<const char*> kinds) {
      std::string n = name();
      auto it = sc_.sections.find(n);
      if (it == sc_.sections.end()) throw SchemaError(ptr, "unknown section '" + n + "'");
      for (const char* k : kinds) {
        if (it->second.kind == k) return;
      }
      throw SchemaError(ptr, "section '" + n + "' has kind " + it->second.kind);
    };
    switch (ref.kind) {
      case RefKind::Curve:
        if (!sc_.curves.count(name())) throw SchemaError(ptr, "unknown curve '" + name() + "'");
        break;
      case RefKind::Point:
        if (!sc_.points.count(name())) throw SchemaError(ptr, "unknown point '" + name() + "'");
        break;
      case RefKind::SectionV: section_kind({"V"}); break;
      case RefKind::SectionE: section_kind({"E"}); break;
      case RefKind::SectionEbar: section_kind({"Ebar"}); break;
      case RefKind::SectionAny: section_kind({"V", "E", "Ebar", "tilde"}); break;
      case RefKind::Number:
        if (!(number_at(v, ptr) > 0.0)) throw SchemaError(ptr, "must be positive");
        break;
      case RefKind::Vector: numbers_at(v, ptr, std::size_t(sc_.chart.k)); break;
    }
  }

  void load_checks() {
    const json& cs = array_at(doc_["checks"], "/checks");
    std::set<std::string> names;
    for (std::size_t j = 0; j < cs.size(); ++j) {
      std::string ptr = child("/checks", j);
      const json& c = cs[j];
      CheckDef def;
      def.pointer = ptr;
      def.type = string_at(need(c, "type", ptr), child(ptr, "type"));
      def.name = c.contains("name") ? string_at(c["name"], child(ptr, "name")) : def.type;
      if (!names.insert(def.name).second) throw SchemaError(child(ptr, "name"), "duplicate check name '" + def.name + "'");
      if (c.contains("expect")) {
        def.expect = string_at(c["expect"], child(ptr, "expect"));
        if (def.expect != "pass" && def.expect != "fail" && def.expect != "error") {
          throw SchemaError(child(ptr, "expect"), "expected pass, fail or error");
        }
      }
      auto it = check_schema().find(def.type);
      if (it == check_schema().end()) throw SchemaError(child(ptr, "type"), "unknown check type '" + def.type + "'");
      def.params = c;
      for (const auto& ref : it->second) check_ref(def, ref);
      if (kNeedsAlgebroid.count(def.type) && !sc_.algebroid) {
        throw SchemaError(child(ptr, "type"), "check type " + def.type + " needs an algebroid structure");
      }
      if (def.type == "lagrangian" && !sc_.lagrangian) {
        throw SchemaError(child(ptr, "type"), "check type lagrangian needs a Lagrangian");
      }
      if (def.type == "sode" && !sc_.pseudo_sode && !sc_.lagrangian) {
        throw SchemaError(child(ptr, "type"), "check type sode needs a pseudo_sode or a Lagrangian");
      }
      bool needs_connection = def.type != "validate" && def.type != "admissible" && def.type != "algebroid" &&
                              def.type != "sode" && def.type != "lagrangian";
      if (needs_connection && sc_.active.empty()) {
        throw SchemaError(child(ptr, "type"), "check type " + def.type + " needs a connection source");
      }
      sc_.checks.push_back(std::move(def));
    }
  }

  void load_transports() {
    const json& ts = array_at(doc_["transports"], "/transports");
    for (std::size_t j = 0; j < ts.size(); ++j) {
      std::string ptr = child("/transports", j);
      TransportDef t;
      t.curve = string_at(need(ts[j], "curve", ptr), child(ptr, "curve"));
      t.point = string_at(need(ts[j], "point", ptr), child(ptr, "point"));
      if (!sc_.curves.count(t.curve)) throw SchemaError(child(ptr, "curve"), "unknown curve '" + t.curve + "'");
      if (!sc_.points.count(t.point)) throw SchemaError(child(ptr, "point"), "unknown point '" + t.point + "'");
      sc_.transports.push_back(std::move(t));
    }
  }
};

}  // namespace

TildeSection SectionDef::tilde() const {
  if (kind == "tilde") return {X0, components};
  if (kind == "E") return SectionE{components}.tilde();
  if (kind == "Ebar") return SectionEbar{components}.tilde();
  throw ConfigError("a section of V has no e_0/ebar components");
}

Scenario parse_scenario(const json& doc) { return Loader(doc).run(); }

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw SchemaError("", std::string("invalid JSON: ") + err.what());
  }
  return parse_scenario(doc);
}

const std::vector<std::string>& check_types() {
  static const std::vector<std::string> types = [] {
    std::vector<std::string> t;
    for (const auto& [name, refs] : check_schema()) t.push_back(name);
    return t;
  }();
  return types;
}

PseudoSode active_pseudo_sode(const Scenario& sc, const SampleBox& box) {
  if (!sc.algebroid) throw ConfigError("a pseudo-SODE connection needs an algebroid structure");
  if (sc.active == "pseudo_sode" || (sc.active != "lagrangian" && sc.pseudo_sode)) {
    if (!sc.pseudo_sode) throw ConfigError("scenario has no pseudo_sode");
    return *sc.pseudo_sode;
  }
  if (!sc.lagrangian) throw ConfigError("scenario has neither a pseudo_sode nor a Lagrangian");
  return lagrangian_sode(*sc.algebroid, *sc.lagrangian, box);
}

Connection active_connection(const Scenario& sc, const SampleBox& box) {
  if (sc.active == "connection") return {sc.chart, sc.anchor, *sc.connection};
  if (sc.active == "pseudo_sode" || sc.active == "lagrangian") {
    return sode_connection(*sc.algebroid, active_pseudo_sode(sc, box));
  }
  throw ConfigError("scenario has no connection source");
}

SampleBox sample_box(const Scenario& sc, std::string_view salt) {
  SampleBox box = SampleBox::chart(sc.chart.n, sc.chart.k, sc.numeric.box.lo, sc.numeric.box.hi,
                                   sc.numeric.samples, mix_seed(sc.numeric.seed, salt));
  for (const auto& [var, iv] : sc.numeric.vars) box.ranges[var] = iv;
  return box;
}

const SectionDef& section_ref(const Scenario& sc, const std::string& name, std::initializer_list<const char*> kinds) {
  auto it = sc.sections.find(name);
  if (it == sc.sections.end()) throw ConfigError("unknown section '" + name + "'");
  for (const char* k : kinds) {
    if (it->second.kind == k) return it->second;
  }
  throw ConfigError("section '" + name + "' has kind " + it->second.kind);
}

const EPoint& point_ref(const Scenario& sc, const std::string& name) {
  auto it = sc.points.find(name);
  if (it == sc.points.end()) throw ConfigError("unknown point '" + name + "'");
  return it->second;
}

const AdmissibleCurve& curve_ref(const Scenario& sc, const std::string& name) {
  auto it = sc.curves.find(name);
  if (it == sc.curves.end()) throw ConfigError("unknown curve '" + name + "'");
  return it->second;
}

}  // namespace gconn
