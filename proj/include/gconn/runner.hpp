#pragma once

// Executes the checks of a scenario and collects a Report.

#include <optional>
#include <string>
#include <vector>

#include "gconn/report.hpp"
#include "gconn/scenario.hpp"

namespace gconn {

struct RunOptions {
  std::vector<std::string> only;  // check names; empty means all
  std::optional<double> step;
  std::optional<double> tol;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  bool parallel = true;
};

// Scenario with command-line overrides folded into its numeric settings.
Scenario apply_overrides(Scenario sc, const RunOptions& opts);

CheckResult run_check(const Scenario& sc, const CheckDef& def);

// Throws ConfigError when `only` names a check that does not exist.
Report run_scenario(const Scenario& sc, const RunOptions& opts = {});

}  // namespace gconn
