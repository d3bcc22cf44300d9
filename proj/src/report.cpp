#include "gconn/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "gconn/scenario.hpp"

namespace gconn {

using nlohmann::json;

namespace {

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  std::string s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return NAN;
}

std::string short_number(double v) {
  std::ostringstream out;
  out << std::setprecision(3) << std::scientific << v;
  return out.str();
}

}  // namespace

double CheckResult::max_residual() const {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, r.value);
  return m;
}

bool Report::ok() const {
  for (const auto& c : checks) {
    if (!c.ok()) return false;
  }
  return true;
}

json report_to_json(const Report& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json residuals = json::array();
    for (const auto& res : c.residuals) {
      json witness = json::object();
      for (const auto& [name, value] : res.witness.entries()) witness[name] = number_json(value);
      residuals.push_back({{"name", res.name},
                           {"value", number_json(res.value)},
                           {"tolerance", number_json(res.tolerance)},
                           {"pass", res.pass()},
                           {"witness", witness}});
    }
    json entry{{"name", c.name},         {"type", c.type},          {"status", c.status},
               {"expect", c.expect},     {"ok", c.ok()},            {"residuals", residuals},
               {"exercises", c.exercises}};
    if (!c.verdict.empty()) entry["verdict"] = c.verdict;
    if (!c.message.empty()) entry["message"] = c.message;
    checks.push_back(std::move(entry));
  }
  return json{{"scenario", r.scenario},
              {"seed", r.seed},
              {"checks", checks},
              {"summary", {{"total", r.checks.size()}, {"ok", r.ok()}}}};
}

Report report_from_json(const json& j) {
  try {
    Report r;
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("checks")) {
      CheckResult cr;
      cr.name = c.at("name").get<std::string>();
      cr.type = c.at("type").get<std::string>();
      cr.status = c.at("status").get<std::string>();
      cr.expect = c.at("expect").get<std::string>();
      if (c.contains("verdict")) cr.verdict = c["verdict"].get<std::string>();
      if (c.contains("message")) cr.message = c["message"].get<std::string>();
      cr.exercises = c.at("exercises").get<std::vector<std::string>>();
      for (const auto& res : c.at("residuals")) {
        Residual rr;
        rr.name = res.at("name").get<std::string>();
        rr.value = number_from(res.at("value"));
        rr.tolerance = number_from(res.at("tolerance"));
        for (const auto& [name, value] : res.at("witness").items()) rr.witness.set(name, number_from(value));
        cr.residuals.push_back(std::move(rr));
      }
      r.checks.push_back(std::move(cr));
    }
    return r;
  } catch (const json::exception& err) {
    throw ConfigError(std::string("not a report document: ") + err.what());
  }
}

std::string render_json(const Report& r) { return report_to_json(r).dump(2) + "\n"; }

std::string render_text(const Report& r) {
  std::ostringstream out;
  out << "scenario " << r.scenario << "  seed " << r.seed << "\n\n";
  std::size_t wname = 5, wtype = 4;
  for (const auto& c : r.checks) {
    wname = std::max(wname, c.name.size());
    wtype = std::max(wtype, c.type.size());
  }
  out << std::left << std::setw(int(wname)) << "check" << "  " << std::setw(int(wtype)) << "type"
      << "  status  expect  max residual  time\n";
  for (const auto& c : r.checks) {
    std::ostringstream t;
    t << std::fixed << std::setprecision(3) << c.seconds << "s";
    out << std::left << std::setw(int(wname)) << c.name << "  " << std::setw(int(wtype)) << c.type << "  "
        << std::setw(6) << c.status << "  " << std::setw(6) << c.expect << "  " << std::setw(12)
        << short_number(c.max_residual()) << "  " << t.str() << (c.ok() ? "" : "   <-- unexpected") << '\n';
  }

  for (const auto& c : r.checks) {
    out << "\n[" << c.name << "] " << c.status;
    if (!c.verdict.empty()) out << " (" << c.verdict << ")";
    out << '\n';
    if (!c.message.empty()) out << "  message: " << c.message << '\n';
    if (!c.exercises.empty()) {
      out << "  exercises:";
      for (const auto& e : c.exercises) out << ' ' << e << ';';
      out << '\n';
    }
    std::size_t w = 8;
    for (const auto& res : c.residuals) w = std::max(w, res.name.size());
    for (const auto& res : c.residuals) {
      out << "  " << std::left << std::setw(int(w)) << res.name << "  " << std::setw(10) << short_number(res.value)
          << " <= " << std::setw(10) << short_number(res.tolerance) << "  " << (res.pass() ? "ok" : "FAIL");
      if (!res.pass() && !res.witness.empty()) out << "  at " << res.witness.describe();
      out << '\n';
    }
  }

  std::vector<const CheckResult*> failures;
  for (const auto& c : r.checks) {
    if (!c.ok()) failures.push_back(&c);
  }
  out << '\n';
  if (failures.empty()) {
    out << "all " << r.checks.size() << " checks as expected\n";
  } else {
    out << "failures:\n";
    for (const auto* c : failures) {
      out << "  " << c->name << ": " << c->status << " (expected " << c->expect << ")";
      for (const auto& res : c->residuals) {
        if (!res.pass()) {
          out << "\n    " << res.name << " = " << short_number(res.value);
          if (!res.witness.empty()) out << " at " << res.witness.describe();
        }
      }
      if (!c->message.empty()) out << "\n    " << c->message;
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace gconn
