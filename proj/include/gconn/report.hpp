#pragma once

// Check reports: the structure produced by a scenario run and its JSON and
// text renderings.

#include <cstdint>
#include <string>
#include <vector>

#include "gconn/sampling.hpp"
#include "json.hpp"

namespace gconn {

struct CheckResult {
  std::string name;
  std::string type;
  std::string status;  // pass, fail or error
  std::string expect = "pass";
  std::string verdict;
  std::string message;
  std::vector<Residual> residuals;
  std::vector<std::string> exercises;  // identities and formulas the check exercises
  double seconds = 0.0;                // text rendering only

  bool ok() const { return status == expect; }
  double max_residual() const;
};

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool ok() const;
  int exit_code() const { return ok() ? 0 : 1; }
};

// Keys are sorted and timings are left out, so equal runs give equal bytes.
nlohmann::json report_to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

std::string render_json(const Report& r);
std::string render_text(const Report& r);

}  // namespace gconn
