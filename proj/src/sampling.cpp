#include "gconn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gconn {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                           43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

SampleBox SampleBox::chart(int n, int k, double lo, double hi, int count, std::uint64_t seed) {
  SampleBox box;
  for (int i = 1; i <= n; ++i) box.ranges["x" + std::to_string(i)] = {lo, hi};
  for (int a = 1; a <= k; ++a) box.ranges["y" + std::to_string(a)] = {lo, hi};
  box.count = count;
  box.seed = seed;
  return box;
}

std::vector<Env> SampleBox::points() const {
  if (ranges.size() > std::size(kPrimes)) throw std::invalid_argument("sample box has too many dimensions");
  std::mt19937_64 rng(seed);
  std::vector<double> shift;
  for (std::size_t d = 0; d < ranges.size(); ++d) {
    shift.push_back(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  std::vector<Env> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int j = 0; j < count; ++j) {
    Env env;
    std::size_t d = 0;
    for (const auto& [name, iv] : ranges) {
      double t = radical_inverse(static_cast<std::uint64_t>(j) + 1, kPrimes[d]) + shift[d];
      t -= std::floor(t);
      env.set(name, iv.lo + (iv.hi - iv.lo) * t);
      ++d;
    }
    out.push_back(std::move(env));
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : salt) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return seed ^ h;
}

void ResidualReport::add(std::string name, double value, double tolerance, Env witness) {
  entries.push_back({std::move(name), value, tolerance, std::move(witness)});
}

void ResidualReport::append(const ResidualReport& other, const std::string& prefix) {
  for (const auto& r : other.entries) {
    entries.push_back(r);
    if (!prefix.empty()) entries.back().name = prefix + r.name;
  }
}

bool ResidualReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const Residual& r) { return r.pass(); });
}

double ResidualReport::max() const {
  double m = 0.0;
  for (const auto& r : entries) m = std::max(m, r.value);
  return m;
}

const Residual* ResidualReport::worst() const {
  const Residual* w = nullptr;
  for (const auto& r : entries) {
    if (!r.pass() && (!w || r.value / r.tolerance > w->value / w->tolerance)) w = &r;
  }
  return w;
}

double sweep_max(const std::vector<Env>& points, const std::function<double(const Env&)>& f,
                 Env* witness) {
  double best = 0.0;
  for (const auto& p : points) {
    double v;
    try {
      v = std::abs(f(p));
    } catch (const EvalError& err) {
      throw EvalError(err.kind(), std::string(err.what()) + " at " + p.describe());
    }
    if (std::isnan(v)) v = INFINITY;
    if (v > best || (witness && witness->empty())) {
      if (v > best) best = v;
      if (witness) *witness = p;
    }
  }
  return best;
}

double max_abs(const Expr& e, const std::vector<Env>& points, Env* witness) {
  if (e.is_constant()) return std::abs(e.value());
  return sweep_max(points, [&](const Env& p) { return e.evaluate(p); }, witness);
}

bool is_zero(const Expr& e, const SampleBox& box, double tol) {
  if (e.is_zero_constant()) return true;
  if (e.is_constant()) return std::abs(e.value()) <= tol;
  return max_abs(e, box.points()) <= tol;
}

}  // namespace gconn
