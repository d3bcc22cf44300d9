#pragma once

// Scenario documents: one JSON file describing a chart, its geometric data,
// numeric settings and the checks to run.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gconn/algebroid.hpp"
#include "json.hpp"

namespace gconn {

// Schema violation; what() starts with the JSON pointer of the offending node.
class SchemaError : public ConfigError {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : ConfigError(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

struct NumericConfig {
  double h_step = 1e-3;
  double tol = 1e-8;  // transport-type tolerances
  int samples = 64;
  std::uint64_t seed = 42;
  Interval box{-1.0, 1.0};
  std::map<std::string, Interval, std::less<>> vars;  // per-variable overrides
};

struct SectionDef {
  std::string kind;  // "V", "E", "Ebar" or "tilde"
  std::vector<Expr> components;
  Expr X0;  // tilde only

  TildeSection tilde() const;
};

struct CheckDef {
  std::string name;
  std::string type;
  std::string expect = "pass";  // pass, fail or error
  nlohmann::json params;
  std::string pointer;
};

struct TransportDef {
  std::string curve;
  std::string point;
};

struct Scenario {
  std::string name;
  ChartSpec chart;
  AnchorSpec anchor;
  std::optional<std::vector<std::vector<Expr>>> connection;
  std::optional<AlgebroidSpec> algebroid;
  std::optional<PseudoSode> pseudo_sode;
  std::optional<LagrangianSpec> lagrangian;
  std::string active;  // "connection", "pseudo_sode", "lagrangian" or empty
  std::map<std::string, AdmissibleCurve> curves;
  std::map<std::string, SectionDef> sections;
  std::map<std::string, EPoint> points;
  NumericConfig numeric;
  std::vector<CheckDef> checks;
  std::vector<TransportDef> transports;
  // Every expression string in the document with its JSON pointer.
  std::vector<std::pair<std::string, std::string>> expressions;
};

Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

const std::vector<std::string>& check_types();

// Connection designated by `active`; pseudo-SODE and Lagrangian sources go
// through the algebroid. `box` is used for the Lagrangian regularity test.
Connection active_connection(const Scenario& sc, const SampleBox& box);
PseudoSode active_pseudo_sode(const Scenario& sc, const SampleBox& box);

// Chart box for a check; the seed is salted with the check name so that
// checks do not share sample points by position in the list.
SampleBox sample_box(const Scenario& sc, std::string_view salt);

const SectionDef& section_ref(const Scenario& sc, const std::string& name, std::initializer_list<const char*> kinds);
const EPoint& point_ref(const Scenario& sc, const std::string& name);
const AdmissibleCurve& curve_ref(const Scenario& sc, const std::string& name);

}  // namespace gconn
