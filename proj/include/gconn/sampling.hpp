#pragma once

// Quasi-random sample boxes, numerical zero tests and residual bookkeeping.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gconn/expr.hpp"

namespace gconn {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

// A box in variable space sampled by a shifted Halton sequence. Dimensions are
// taken in name order, so the point set only depends on (ranges, count, seed).
struct SampleBox {
  std::map<std::string, Interval, std::less<>> ranges;
  int count = 64;
  std::uint64_t seed = 42;

  // x1..xn, y1..yk, all in [lo, hi].
  static SampleBox chart(int n, int k, double lo, double hi, int count, std::uint64_t seed);

  std::vector<Env> points() const;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt);

struct Residual {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Env witness;  // where the maximum was attained (may be empty)

  bool pass() const { return value <= tolerance; }
};

struct ResidualReport {
  std::vector<Residual> entries;

  void add(std::string name, double value, double tolerance, Env witness = {});
  void append(const ResidualReport& other, const std::string& prefix = {});
  bool pass() const;
  double max() const;
  const Residual* worst() const;
};

// Maximum of |f| over the box; `witness` receives the arg-max point.
// Evaluation errors are rethrown with the offending point attached.
double sweep_max(const std::vector<Env>& points, const std::function<double(const Env&)>& f,
                 Env* witness = nullptr);

double max_abs(const Expr& e, const std::vector<Env>& points, Env* witness = nullptr);

// Structural zero short-circuits; otherwise |e| <= tol at every sample.
bool is_zero(const Expr& e, const SampleBox& box, double tol = 1e-10);

}  // namespace gconn
