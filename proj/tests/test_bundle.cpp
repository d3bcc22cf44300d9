#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "gconn/bundle.hpp"
#include "gconn/sampling.hpp"

using namespace gconn;

namespace {

ChartSpec line_chart() { return ChartSpec{1, 1, 1, false}; }

AnchorSpec anchor_of(std::vector<std::vector<std::string>> rows) {
  AnchorSpec a;
  for (const auto& row : rows) {
    std::vector<Expr> r;
    for (const auto& text : row) r.push_back(parse(text));
    a.rho.push_back(r);
  }
  return a;
}

AdmissibleCurve curve(std::vector<std::string> cM, std::vector<std::string> c) {
  AdmissibleCurve out;
  for (const auto& t : cM) out.cM.push_back(parse(t));
  for (const auto& t : c) out.c.push_back(parse(t));
  return out;
}

}  // namespace

TEST_CASE("canonical section reads off the fibre coordinates") {
  EPoint e{{0.4}, {3.0, 5.0}};
  TildeVector t = canonical_section(e);
  CHECK(t.y0 == 1.0);
  CHECK(t.w == std::vector<double>{3.0, 5.0});
  TildeVector origin = canonical_section(EPoint{{0.0}, {0.0, 0.0}});
  CHECK(origin.y0 == 1.0);
  CHECK(origin.w == std::vector<double>{0.0, 0.0});
}

TEST_CASE("canonical map") {
  EPoint e{{0.0}, {1.0}};
  TildeVector model{0.0, {7.0}};
  CHECK(theta_map(e, model).w == std::vector<double>{7.0});
  TildeVector self = theta_map(e, canonical_section(e));
  CHECK(self.y0 == 0.0);
  CHECK(self.w == std::vector<double>{0.0});
  TildeVector t = theta_map(e, TildeVector{2.0, {4.0}});
  CHECK(t.y0 == 0.0);
  CHECK(t.w == std::vector<double>{2.0});
}

TEST_CASE("vertical lift") {
  EPoint e{{0.0}, {1.0}};
  CHECK(vertical_lift(e, TildeVector{0.0, {2.5}}).ydot == std::vector<double>{2.5});
  CHECK(vertical_lift(e, TildeVector{2.0, {4.0}}).ydot == std::vector<double>{2.0});
  CHECK(vertical_lift(e, TildeVector{0.0, {2.5}}).xdot == std::vector<double>{0.0});
}

TEST_CASE("vertical lift kills the canonical section at every sampled point") {
  SampleBox box = SampleBox::chart(2, 3, -2.0, 2.0, 64, 11);
  for (const auto& env : box.points()) {
    EPoint e{{*env.get("x1"), *env.get("x2")}, {*env.get("y1"), *env.get("y2"), *env.get("y3")}};
    for (double c : vertical_lift(e, canonical_section(e)).ydot) CHECK(c == 0.0);
  }
}

TEST_CASE("tilde decomposition") {
  auto identity = tilde_decompose(TildeSection::canonical(2));
  CHECK(identity.f.is_constant(1.0));
  for (const auto& c : identity.bar.X) CHECK(c.is_zero_constant());

  TildeSection model{Expr(), {parse("x1"), parse("y1")}};
  auto m = tilde_decompose(model);
  CHECK(m.f.is_zero_constant());
  CHECK(m.bar.X[0].equals(model.X[0]));
  CHECK(m.bar.X[1].equals(model.X[1]));

  auto d = tilde_decompose(TildeSection{parse("y1"), {parse("1")}});
  CHECK(d.f.str() == "y1");
  CHECK(d.bar.X[0].str() == "1 - y1*y1");
}

TEST_CASE("decomposition and reassembly are inverse") {
  TildeSection X{parse("x1*y2 + 1"), {parse("sin(y1)"), parse("x1 - y2")}};
  TildeSection back = reassemble(tilde_decompose(X));
  SampleBox box = SampleBox::chart(1, 2, -1.0, 1.0, 32, 3);
  CHECK(is_zero(back.X0 - X.X0, box));
  CHECK(is_zero(back.X[0] - X.X[0], box));
  CHECK(is_zero(back.X[1] - X.X[1], box));
}

TEST_CASE("admissibility") {
  AnchorSpec identity = anchor_of({{"1"}});
  auto good = check_admissible(curve({"u"}, {"1"}), identity);
  CHECK(good.pass());
  CHECK(good.max_residual == 0.0);

  auto bad = check_admissible(curve({"u"}, {"2"}), identity);
  CHECK_FALSE(bad.pass());
  CHECK(bad.max_residual == doctest::Approx(1.0).epsilon(1e-12));

  auto kernel = check_admissible(curve({"0.3"}, {"sin(u)"}), AnchorSpec::zero(line_chart()));
  CHECK(kernel.pass());

  // x = u solves dx/du = exp(x) c for c = exp(-u).
  auto curved = check_admissible(curve({"u"}, {"exp(-u)"}), anchor_of({{"exp(x1)"}}));
  CHECK(curved.max_residual <= 1e-14);
}

TEST_CASE("chart validation") {
  auto errors = validate_chart(line_chart(), anchor_of({{"y1 + x1"}}));
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("anchor depends on fibre variable") != std::string::npos);

  ChartSpec anchored{1, 2, 2, true};
  CHECK_FALSE(validate_chart(anchored, anchor_of({{"1", "0"}})).empty());

  ChartSpec plane{2, 1, 2, false};
  CHECK(validate_chart(plane, anchor_of({{"1", "0"}, {"x1", "1"}})).empty());
  CHECK_FALSE(validate_chart(plane, anchor_of({{"1", "0"}})).empty());
}

TEST_CASE("sample boxes are reproducible and seed-dependent") {
  SampleBox a = SampleBox::chart(2, 1, -1.0, 1.0, 16, 42);
  SampleBox b = SampleBox::chart(2, 1, -1.0, 1.0, 16, 42);
  SampleBox c = SampleBox::chart(2, 1, -1.0, 1.0, 16, 43);
  auto pa = a.points(), pb = b.points(), pc = c.points();
  REQUIRE(pa.size() == 16);
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].describe() == pb[i].describe());
    differs = differs || pa[i].describe() != pc[i].describe();
    for (const auto& [name, v] : pa[i].entries()) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(differs);
  CHECK(mix_seed(42, "difference_transport") != mix_seed(42, "brackets"));
}
