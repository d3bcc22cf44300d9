#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gconn/connection.hpp"
#include "gconn/scenario.hpp"
#include "test_support.hpp"

using namespace gconn;
using gconn::testing::derivative_fd;

namespace {

std::vector<std::vector<Expr>> table(std::vector<std::vector<std::string>> rows) {
  std::vector<std::vector<Expr>> out;
  for (const auto& row : rows) {
    std::vector<Expr> r;
    for (const auto& text : row) r.push_back(parse(text));
    out.push_back(r);
  }
  return out;
}

Connection line(const std::string& gamma) {
  ChartSpec chart{1, 1, 1, false};
  return Connection{chart, AnchorSpec{table({{"1"}})}, table({{gamma}})};
}

Connection plane() {
  ChartSpec chart{2, 2, 2, false};
  return Connection{chart, AnchorSpec{table({{"1", "0"}, {"x1", "1"}})},
                    table({{"1 + x2*y1 - y2", "x1*y2"}, {"sin(x1)*y1", "2 + y1 + x2*y2"}})};
}

std::vector<Expr> exprs(std::vector<std::string> texts) {
  std::vector<Expr> out;
  for (const auto& t : texts) out.push_back(parse(t));
  return out;
}

// Components of a vector field evaluated numerically, for bracket oracles.
using NumField = std::function<std::vector<double>(const std::vector<double>&)>;

NumField numeric(const VectorFieldE& X, int n, int k) {
  return [X, n, k](const std::vector<double>& p) {
    Env env;
    for (int i = 0; i < n; ++i) env.set(ChartSpec::x(i), p[std::size_t(i)]);
    for (int a = 0; a < k; ++a) env.set(ChartSpec::y(a), p[std::size_t(n + a)]);
    std::vector<double> out;
    for (const auto& c : X.dx) out.push_back(c.evaluate(env));
    for (const auto& c : X.dy) out.push_back(c.evaluate(env));
    return out;
  };
}

// [X, Y] at p from directional finite differences of the components.
std::vector<double> bracket_fd(const NumField& X, const NumField& Y, const std::vector<double>& p) {
  auto directional = [&](const NumField& F, const std::vector<double>& dir) {
    std::vector<double> out(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
      out[c] = derivative_fd(
          [&](double t) {
            std::vector<double> q = p;
            for (std::size_t j = 0; j < p.size(); ++j) q[j] += t * dir[j];
            return F(q)[c];
          },
          0.0);
    }
    return out;
  };
  auto XY = directional(Y, X(p));
  auto YX = directional(X, Y(p));
  for (std::size_t c = 0; c < p.size(); ++c) XY[c] -= YX[c];
  return XY;
}

}  // namespace

TEST_CASE("horizontal map") {
  Connection flat = Connection::flat(ChartSpec{1, 1, 1, false}, AnchorSpec{table({{"2"}})});
  auto h = h_apply(flat, EPoint{{0.3}, {1.0}}, {1.5});
  CHECK(h.xdot == std::vector<double>{3.0});
  CHECK(h.ydot == std::vector<double>{0.0});

  auto zero = h_apply(line("y1"), EPoint{{0.0}, {2.0}}, {0.0});
  CHECK(zero.xdot == std::vector<double>{0.0});
  CHECK(zero.ydot == std::vector<double>{0.0});

  auto worked = h_apply(line("y1"), EPoint{{0.0}, {2.0}}, {3.0});
  CHECK(worked.xdot == std::vector<double>{3.0});
  CHECK(worked.ydot == std::vector<double>{-6.0});
}

TEST_CASE("horizontal map is linear over the anchor at sampled points") {
  Connection conn = plane();
  SampleBox box = default_box(conn.chart);
  for (const auto& env : box.points()) {
    EPoint e{{*env.get("x1"), *env.get("x2")}, {*env.get("y1"), *env.get("y2")}};
    std::vector<double> v{0.7 * e.y[0], -1.3 + e.x[1]};
    auto h = h_apply(conn, e, v);
    CHECK(h.xdot[0] == doctest::Approx(v[0]));
    CHECK(h.xdot[1] == doctest::Approx(e.x[0] * v[0] + v[1]));
    auto h2 = h_apply(conn, e, {2.0 * v[0], 2.0 * v[1]});
    CHECK(h2.ydot[0] == doctest::Approx(2.0 * h.ydot[0]));
    CHECK(h2.ydot[1] == doctest::Approx(2.0 * h.ydot[1]));
  }
}

TEST_CASE("horizontal basis") {
  auto flat = horizontal_basis(Connection::flat(ChartSpec{1, 1, 1, false}, AnchorSpec{table({{"1"}})}));
  CHECK(flat[0].z[0].is_constant(1.0));
  CHECK(flat[0].Z[0].is_zero_constant());

  auto H = horizontal_basis(line("y1"));
  CHECK(H[0].z[0].is_constant(1.0));
  CHECK(H[0].Z[0].str() == "-y1");

  // Adapted components of H_a are the unit vectors with vanishing W.
  Connection conn = plane();
  auto basis = horizontal_basis(conn);
  for (int a = 0; a < 2; ++a) {
    AdaptedSection ad = to_adapted(conn, basis[std::size_t(a)]);
    for (int b = 0; b < 2; ++b) CHECK(ad.z[std::size_t(b)].is_constant(a == b ? 1.0 : 0.0));
    for (const auto& w : ad.W) CHECK(is_zero(w, default_box(conn.chart)));
  }
}

TEST_CASE("adapted and coordinate components round-trip") {
  Connection conn = plane();
  ProlongedSection p{exprs({"x1*y2", "cos(y1)"}), exprs({"1 + x2", "y1*y2"})};
  ProlongedSection back = from_adapted(conn, to_adapted(conn, p));
  SampleBox box = default_box(conn.chart);
  for (int i = 0; i < 2; ++i) {
    CHECK(is_zero(back.z[std::size_t(i)] - p.z[std::size_t(i)], box));
    CHECK(is_zero(back.Z[std::size_t(i)] - p.Z[std::size_t(i)], box));
  }
}

TEST_CASE("connection map") {
  Connection conn = line("y1");
  EPoint e{{0.0}, {2.0}};
  auto Q = h_apply(conn, e, {1.0});
  CHECK(connection_map_K(conn, e, {1.0}, Q)[0] == 0.0);
  CHECK(connection_map_K(conn, e, {1.0}, TangentVector{{1.0}, {0.0}})[0] == 2.0);
  CHECK(connection_map_K(conn, e, {0.0}, TangentVector{{0.0}, {-0.75}})[0] == -0.75);
  CHECK_THROWS(connection_map_K(conn, e, {1.0}, TangentVector{{2.0}, {0.0}}));

  Connection p = plane();
  SampleBox box = default_box(p.chart);
  for (const auto& env : box.points()) {
    EPoint pt{{*env.get("x1"), *env.get("x2")}, {*env.get("y1"), *env.get("y2")}};
    auto K = connection_map_K(p, pt, {0.5, -0.25}, h_apply(p, pt, {0.5, -0.25}));
    CHECK(std::abs(K[0]) <= 1e-15);
    CHECK(std::abs(K[1]) <= 1e-15);
  }
}

TEST_CASE("affineness and the affine split") {
  auto split = affine_split(line("3 + 2*y1"));
  CHECK(split.gamma0[0][0].evaluate(Env{{"x1", 0.2}}) == 3.0);
  CHECK(split.gamma1[0][0][0].evaluate(Env{{"x1", 0.2}}) == 2.0);
  CHECK(is_affine(line("3 + 2*y1")));
  CHECK_FALSE(is_affine(line("y1^2")));
  CHECK_FALSE(is_affine(line("sin(y1)")));
  CHECK(is_affine(line("0")));
  auto zero = affine_split(line("0"));
  CHECK(zero.gamma0[0][0].is_zero_constant());
  CHECK(zero.gamma1[0][0][0].is_zero_constant());
  CHECK_THROWS_AS(affine_split(line("y1^2")), NotAffineError);

  // The split reassembles to the original connection.
  Connection conn = plane();
  Connection again = affine_split(conn).connection();
  for (int alpha = 0; alpha < 2; ++alpha) {
    for (int a = 0; a < 2; ++a) CHECK(is_zero(again.gamma[alpha][a] - conn.gamma[alpha][a], default_box(conn.chart)));
  }
}

TEST_CASE("covariant derivatives of basic sections") {
  auto split = affine_split(line("y1"));
  SectionEbar d = nabla(split, SectionV{exprs({"1"})}, SectionE{exprs({"x1"})});
  for (double x : {-0.5, 0.0, 0.75}) CHECK(d.sigma[0].evaluate(Env{{"x1", x}}) == doctest::Approx(1.0 + x));

  SectionEbar z = nabla_bar(split, SectionV{exprs({"1"})}, SectionEbar{exprs({"0"})});
  CHECK(z.sigma[0].evaluate(Env{{"x1", 0.3}}) == 0.0);

  auto flat = affine_split(line("0"));
  SectionEbar f = nabla_bar(flat, SectionV{exprs({"x1"})}, SectionEbar{exprs({"sin(x1)"})});
  for (double x : {-0.5, 0.25}) CHECK(f.sigma[0].evaluate(Env{{"x1", x}}) == doctest::Approx(x * std::cos(x)));
}

TEST_CASE("unified covariant derivative on the extended bundle") {
  Connection conn = line("x1 + 2*y1");
  SectionV s{exprs({"1 + x1"})};
  SampleBox box = default_box(conn.chart);
  auto split = affine_split(conn);

  SectionEbar sb{exprs({"cos(x1)"})};
  TildeSection a = nabla_tilde(conn, s, sb.tilde());
  CHECK(is_zero(a.X0, box));
  CHECK(is_zero(a.X[0] - nabla_bar(split, s, sb).sigma[0], box));

  SectionE se{exprs({"x1^2"})};
  TildeSection b = nabla_tilde(conn, s, se.tilde());
  CHECK(is_zero(b.X0, box));
  CHECK(is_zero(b.X[0] - nabla(split, s, se).sigma[0], box));

  Connection flat = line("0");
  TildeSection c = nabla_tilde(flat, SectionV{exprs({"1"})}, TildeSection{parse("x1"), {parse("0")}});
  // f nabla sigma + rho(s)(f) sigma with sigma = e_0: the result is e_0, which
  // decomposes as 1*I - y1*ebar_1.
  CHECK(is_zero(c.X0 - parse("1"), box));
  CHECK(is_zero(c.X[0], box));
  auto parts = tilde_decompose(c);
  CHECK(is_zero(parts.f - parse("1"), box));
  CHECK(is_zero(parts.bar.X[0] + parse("y1"), box));

  CHECK_THROWS_AS(nabla_tilde(line("y1^2"), s, sb.tilde()), NotAffineError);
}

TEST_CASE("bracket of horizontal and vertical fields against finite differences") {
  Connection conn = plane();
  SectionV s{exprs({"1", "0.5*x2"})};
  SectionE sigma{exprs({"x1*x2", "cos(x2)"})};
  auto h = numeric(horizontal_field(conn, s), 2, 2);
  auto v = numeric(vertical_field(conn.chart, sigma.tilde()), 2, 2);
  SectionEbar expected = nabla(affine_split(conn), s, sigma);
  for (const auto& p : std::vector<std::vector<double>>{{0.1, 0.2, 0.3, -0.4}, {-0.7, 0.5, 1.1, 0.2}}) {
    auto br = bracket_fd(h, v, p);
    Env env{{"x1", p[0]}, {"x2", p[1]}};
    CHECK(std::abs(br[0]) <= 1e-8);
    CHECK(std::abs(br[1]) <= 1e-8);
    CHECK(std::abs(br[2] - expected.sigma[0].evaluate(env)) <= 1e-8);
    CHECK(std::abs(br[3] - expected.sigma[1].evaluate(env)) <= 1e-8);
  }
}

TEST_CASE("bracket identities for affine connections") {
  auto run = [](const Connection& conn, SectionV s, SectionE sigma, SectionEbar sigmabar) {
    SampleBox box = SampleBox::chart(conn.chart.n, conn.chart.k, -1.0, 1.0, 64, 42);
    auto r = verify_bracket_formulas(conn, s, sigma, sigmabar, box);
    r.append(verify_horizontal_from_bracket(conn, s, sigma, sigmabar, box));
    return r;
  };
  auto flat = run(line("0"), SectionV{exprs({"x1"})}, SectionE{exprs({"exp(x1)"})}, SectionEbar{exprs({"x1^3"})});
  CHECK(flat.pass());
  auto worked = run(line("x1 + 2*y1"), SectionV{exprs({"1"})}, SectionE{exprs({"sin(x1)"})},
                    SectionEbar{exprs({"x1"})});
  CHECK(worked.pass());
  CHECK(worked.max() <= 1e-12);
  auto two = run(plane(), SectionV{exprs({"1", "0.5*x2"})}, SectionE{exprs({"x1*x2", "cos(x2)"})},
                 SectionEbar{exprs({"1 + x1", "x2^2"})});
  CHECK(two.pass());
  CHECK_THROWS_AS(run(line("y1^2"), SectionV{exprs({"1"})}, SectionE{exprs({"x1"})}, SectionEbar{exprs({"x1"})}),
                  NotAffineError);
}
