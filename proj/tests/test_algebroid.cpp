#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "gconn/algebroid.hpp"
#include "gconn/berwald.hpp"
#include "gconn/vector_field.hpp"
#include "test_support.hpp"

using namespace gconn;

namespace {

AnchorSpec anchor_of(std::vector<std::vector<std::string>> rows) {
  AnchorSpec a;
  for (const auto& row : rows) {
    std::vector<Expr> r;
    for (const auto& t : row) r.push_back(parse(t));
    a.rho.push_back(r);
  }
  return a;
}

// n = k = 1 classical chart: rho(e_0) = 0, rho(e_1) = d/dx1.
AlgebroidSpec classical_line() { return AlgebroidSpec::abelian(ChartSpec{1, 1, 2, true}, anchor_of({{"0", "1"}})); }

SampleBox box_for(const ChartSpec& chart, int count = 32) { return SampleBox::chart(chart.n, chart.k, -1.0, 1.0, count, 9); }

bool same(const ProlongedSection& p, const ProlongedSection& q, const SampleBox& box, double tol = 1e-12) {
  bool ok = true;
  for (std::size_t i = 0; i < p.z.size(); ++i) ok = ok && max_abs(p.z[i] - q.z[i], box.points()) <= tol;
  for (std::size_t i = 0; i < p.Z.size(); ++i) ok = ok && max_abs(p.Z[i] - q.Z[i], box.points()) <= tol;
  return ok;
}

ProlongedSection random_section(const ChartSpec& chart, std::mt19937_64& rng) {
  ProlongedSection p = ProlongedSection::zero(chart);
  std::vector<std::string> vars;
  for (int i = 0; i < chart.n; ++i) vars.push_back(ChartSpec::x(i));
  for (int a = 0; a < chart.k; ++a) vars.push_back(ChartSpec::y(a));
  for (auto& c : p.z) c = gconn::testing::random_tree(rng, vars, 2);
  for (auto& c : p.Z) c = gconn::testing::random_tree(rng, vars, 2);
  return p;
}

}  // namespace

TEST_CASE("algebroid axioms") {
  ChartSpec k2{1, 2, 3, true};
  auto abelian = AlgebroidSpec::abelian(k2, anchor_of({{"1", "2", "-0.5"}}));
  CHECK(validate_algebroid(abelian, box_for(k2)).pass());

  auto c02 = AlgebroidSpec::abelian(k2, AnchorSpec::zero(k2));
  c02.C0[0][1] = Expr::constant(1.0);
  CHECK(validate_algebroid(c02, box_for(k2)).pass());

  auto c12 = AlgebroidSpec::abelian(k2, AnchorSpec::zero(k2));
  c12.C[0][0][1] = parse("x1");
  c12.C[0][1][0] = parse("-x1");
  CHECK(validate_algebroid(c12, box_for(k2)).pass());

  auto lopsided = c12;
  lopsided.C[0][1][0] = parse("x1");
  CHECK_FALSE(validate_algebroid(lopsided, box_for(k2)).pass());

  // rho(e_0) = d/dx1, rho(e_1) = exp(x1) d/dx1 needs [e_0, e_1] = e_1.
  ChartSpec line{1, 1, 2, true};
  auto exp_anchor = AlgebroidSpec::abelian(line, anchor_of({{"1", "exp(x1)"}}));
  CHECK_FALSE(validate_algebroid(exp_anchor, box_for(line)).pass());
  exp_anchor.C0[0][0] = Expr::constant(1.0);
  CHECK(validate_algebroid(exp_anchor, box_for(line)).pass());
  CHECK(exp_anchor.structure(0, 0, 1).is_constant(1.0));
  CHECK(exp_anchor.structure(0, 1, 0).evaluate({}) == -1.0);
}

TEST_CASE("Jacobi residual is antisymmetric in its arguments") {
  ChartSpec k3{1, 3, 4, true};
  auto spec = AlgebroidSpec::abelian(k3, AnchorSpec::zero(k3));
  auto set = [&](int g, int a, int b, const std::string& t) {
    spec.C[g][a][b] = parse(t);
    spec.C[g][b][a] = -parse(t);
  };
  set(0, 1, 2, "x1");
  set(1, 2, 0, "1");
  set(2, 0, 1, "y1 + 2");
  set(1, 0, 1, "1");
  auto pts = box_for(k3, 8).points();
  for (int f = 0; f < 3; ++f) {
    Expr j = jacobi_component(spec, 1, 2, 3, f);
    CHECK(max_abs(j + jacobi_component(spec, 2, 1, 3, f), pts) <= 1e-12);
    CHECK(max_abs(j - jacobi_component(spec, 2, 3, 1, f), pts) <= 1e-12);
    CHECK(max_abs(j + jacobi_component(spec, 1, 3, 2, f), pts) <= 1e-12);
  }
  double nontrivial = 0.0;
  for (int f = 0; f < 3; ++f) nontrivial = std::max(nontrivial, max_abs(jacobi_component(spec, 1, 2, 3, f), pts));
  CHECK(nontrivial > 1e-3);
  CHECK_FALSE(validate_algebroid(spec, box_for(k3, 8)).pass());
}

TEST_CASE("vertical endomorphism") {
  ChartSpec chart{1, 2, 3, true};
  SampleBox box = box_for(chart);
  CHECK(same(vertical_endomorphism(chart, ProlongedSection::basis_X(chart, 2)), ProlongedSection::basis_V(chart, 1), box));
  ProlongedSection drift = ProlongedSection::zero(chart);
  drift.Z = {-parse("y1"), -parse("y2")};
  CHECK(same(vertical_endomorphism(chart, ProlongedSection::basis_X(chart, 0)), drift, box));
  PseudoSode f{{parse("x1*y2"), parse("-y1")}};
  CHECK(same(vertical_endomorphism(chart, pseudo_sode_build(chart, f)), ProlongedSection::zero(chart), box));
}

TEST_CASE("prolonged bracket") {
  AlgebroidSpec spec = classical_line();
  const ChartSpec& chart = spec.chart;
  SampleBox box = box_for(chart);
  auto V1 = ProlongedSection::basis_V(chart, 0);
  CHECK(same(prolonged_bracket(spec, V1, V1), ProlongedSection::zero(chart), box));

  Connection conn{chart, spec.anchor, {{parse("0"), parse("y1")}}};
  auto Hs = horizontal_basis(conn);
  CHECK(same(prolonged_bracket(spec, Hs[1], V1), V1, box));

  ChartSpec k2{2, 2, 3, true};
  auto twisted = AlgebroidSpec::abelian(k2, anchor_of({{"1", "0", "0"}, {"0", "1", "x2"}}));
  twisted.C[0][0][1] = Expr::constant(1.0);
  twisted.C[0][1][0] = Expr::constant(-1.0);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5; ++i) {
    auto Z1 = random_section(k2, rng);
    auto Z2 = random_section(k2, rng);
    CHECK(same(prolonged_bracket(twisted, Z1, Z2) + prolonged_bracket(twisted, Z2, Z1), ProlongedSection::zero(k2),
               box_for(k2, 8), 1e-10));
  }
}

TEST_CASE("pseudo-SODE and its connection") {
  AlgebroidSpec spec = classical_line();
  const ChartSpec& chart = spec.chart;
  SampleBox box = box_for(chart);
  ProlongedSection drift = pseudo_sode_build(chart, PseudoSode{{Expr()}});
  CHECK(drift.z[0].is_constant(1.0));
  CHECK(drift.z[1].str() == "y1");
  CHECK(drift.Z[0].is_zero_constant());
  ProlongedSection damped = pseudo_sode_build(chart, PseudoSode{{parse("-y1")}});
  CHECK(damped.Z[0].str() == "-y1");

  Connection zero = sode_connection(spec, PseudoSode{{Expr()}});
  CHECK(is_zero(zero.gamma[0][0], box));
  CHECK(is_zero(zero.gamma[0][1], box));

  Connection d = sode_connection(spec, PseudoSode{{parse("-y1")}});
  CHECK(is_zero(d.gamma[0][1] - parse("0.5"), box));
  CHECK(is_zero(d.gamma[0][0] - parse("0.5*y1"), box));

  auto twisted = spec;
  twisted.C0[0][0] = Expr::constant(0.8);
  Connection t = sode_connection(twisted, PseudoSode{{Expr()}});
  CHECK(is_zero(t.gamma[0][1] + parse("0.4"), box));
  CHECK(is_zero(t.gamma[0][0] - parse("0.4*y1"), box));
}

TEST_CASE("horizontal projector") {
  AlgebroidSpec spec = classical_line();
  const ChartSpec& chart = spec.chart;
  SampleBox box = box_for(chart);
  PseudoSode f{{parse("-y1 + x1*y1^2")}};
  ProlongedSection G = pseudo_sode_build(chart, f);
  CHECK(same(horizontal_projector(spec, f, G), G, box, 1e-10));
  CHECK(same(horizontal_projector(spec, f, ProlongedSection::basis_V(chart, 0)), ProlongedSection::zero(chart), box,
             1e-10));
  for (const auto& H : horizontal_basis(sode_connection(spec, f))) {
    CHECK(same(horizontal_projector(spec, f, H), H, box, 1e-10));
  }
}

TEST_CASE("sode suite on several algebroids") {
  auto run = [](const AlgebroidSpec& spec, PseudoSode f) {
    auto r = verify_sode_suite(spec, f, box_for(spec.chart));
    INFO(r.worst()->name);
    CHECK(r.pass());
  };
  run(classical_line(), PseudoSode{{parse("-y1")}});
  auto exp_anchor = AlgebroidSpec::abelian(ChartSpec{1, 1, 2, true}, anchor_of({{"1", "exp(x1)"}}));
  exp_anchor.C0[0][0] = Expr::constant(1.0);
  run(exp_anchor, PseudoSode{{parse("x1*y1^2 - y1")}});
  ChartSpec k2{2, 2, 3, true};
  auto twisted = AlgebroidSpec::abelian(k2, anchor_of({{"1", "0", "0"}, {"0", "1", "x2"}}));
  twisted.C[0][0][1] = Expr::constant(1.0);
  twisted.C[0][1][0] = Expr::constant(-1.0);
  run(twisted, PseudoSode{{parse("-y1 + x2*y2^2"), parse("sin(x1) - y2")}});
}

TEST_CASE("adapted brackets of the sode connection") {
  AlgebroidSpec spec = classical_line();
  Connection conn = sode_connection(spec, PseudoSode{{parse("-y1")}});
  auto r = verify_adapted_brackets(spec, conn, box_for(spec.chart));
  CHECK(r.pass());
  CHECK(r.max() <= 1e-10);
}

TEST_CASE("Lagrangian pseudo-SODE") {
  AlgebroidSpec spec = classical_line();
  SampleBox box = box_for(spec.chart);
  auto free = lagrangian_sode(spec, LagrangianSpec{parse("0.5*y1^2")}, box);
  CHECK(is_zero(free.f[0], box));
  auto well = lagrangian_sode(spec, LagrangianSpec{parse("0.5*y1^2 - (x1^2 + cos(x1))")}, box);
  CHECK(is_zero(well.f[0] - parse("-(2*x1 - sin(x1))"), box));
  CHECK_THROWS_AS(lagrangian_sode(spec, LagrangianSpec{parse("y1")}, box), RegularityError);

  auto hess = lagrangian_hessian(ChartSpec{1, 2, 3, true}, parse("y1^2*y2 + x1*y2^2"));
  CHECK(hess[0][1].str() == "2*y1");
}

TEST_CASE("Euler-Lagrange equations along integrated trajectories") {
  // Time-dependent classical chart: x1 is time, rho(e_0) = d/dx1, rho(e_1) = d/dx2.
  ChartSpec chart{2, 1, 2, true};
  auto spec = AlgebroidSpec::abelian(chart, anchor_of({{"1", "0"}, {"0", "1"}}));
  LagrangianSpec L{parse("0.5*y1^2 - (0.5*x2^2 + 0.1*x2^4) + x1*x2")};
  auto f = lagrangian_sode(spec, L, box_for(chart));
  auto r = verify_euler_lagrange(spec, L, f, EPoint{{0.0, 0.5}, {0.2}}, 1.0, TransportConfig{});
  CHECK(r.pass());
  CHECK(r.max() <= 1e-6);
  // The wrong force must be caught by the same oracle.
  auto bad = verify_euler_lagrange(spec, L, PseudoSode{{parse("-x2")}}, EPoint{{0.0, 0.5}, {0.2}}, 1.0,
                                   TransportConfig{});
  CHECK_FALSE(bad.pass());
}

TEST_CASE("direct bracket formulae against the coefficient tables") {
  AlgebroidSpec spec = classical_line();
  const ChartSpec& chart = spec.chart;
  SampleBox box = box_for(chart);
  Connection flat = Connection::flat(chart, spec.anchor);
  CHECK(verify_direct_formulae(spec, flat, box).max() <= 1e-12);
  Connection damped = sode_connection(spec, PseudoSode{{parse("-y1")}});
  CHECK(verify_direct_formulae(spec, damped, box).pass());
  Connection freep = sode_connection(spec, lagrangian_sode(spec, LagrangianSpec{parse("0.5*y1^2")}, box));
  CHECK(verify_direct_formulae(spec, freep, box).pass());

  // Horizontal Z with basic X reproduces the bracket [hs, v sigma].
  Connection conn{chart, spec.anchor, {{parse("y1^2"), parse("x1*y1")}}};
  SectionV s{{parse("1"), parse("x1")}};
  SectionE sigma{{parse("sin(x1)")}};
  ProlongedSection Zh = from_adapted(conn, AdaptedSection{s.s, {Expr()}});
  VectorFieldE br = lie_bracket(horizontal_field(conn, s), vertical_field(chart, sigma.tilde()));
  for (auto variant : {BerwaldVariant::Plain, BerwaldVariant::Hat}) {
    TildeSection D = berwald_direct(spec, conn, Zh, sigma.tilde(), variant);
    CHECK(max_abs(D.X0, box.points()) <= 1e-10);
    CHECK(max_abs(D.X[0] - br.dy[0], box.points()) <= 1e-10);
  }
  auto V1 = ProlongedSection::basis_V(chart, 0);
  TildeSection hatI = berwald_direct(spec, conn, V1, TildeSection::canonical(1), BerwaldVariant::Hat);
  CHECK(is_zero(hatI.X0, box));
  CHECK(is_zero(hatI.X[0], box));
  TildeSection plainSigma = berwald_direct(spec, conn, V1, sigma.tilde(), BerwaldVariant::Plain);
  CHECK(is_zero(plainSigma.X0, box));
  CHECK(is_zero(plainSigma.X[0], box));
}
