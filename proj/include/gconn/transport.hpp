#pragma once

// Parallel transport, linear parallel transport and Lie transport by
// fixed-step classical Runge-Kutta integration.

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "gconn/connection.hpp"

namespace gconn {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransportConfig {
  double h_step = 1e-3;
  double tol_report = 1e-8;
};

using OdeRhs = std::function<void(double u, const std::vector<double>& state, std::vector<double>& deriv)>;

struct OdeSolution {
  std::vector<double> u;
  std::vector<std::vector<double>> states;
};

// Classical RK4 from u0 to u1 with N = round(|u1 - u0| / h) equal steps.
// Throws TransportError when the state stops being finite.
OdeSolution rk4_integrate(const OdeRhs& rhs, double u0, double u1, std::vector<double> state, double h);

// Base point c_M(u) and V-components c(u) of a curve.
using CurveFn = std::function<void(double u, std::vector<double>& x, std::vector<double>& c)>;
CurveFn curve_fn(const AdmissibleCurve& c);

struct DiscreteCurve {
  std::vector<double> u;
  std::vector<EPoint> points;

  // Columns u, x1..xn, y1..yk.
  void write_csv(std::ostream& out) const;
};

// Horizontal lift of c through e, with the base pinned to c_M(u).
DiscreteCurve horizontal_lift_curve(const Connection& conn, const AdmissibleCurve& c, const EPoint& e,
                                    double from_u, double to_u, const TransportConfig& cfg = {});
inline DiscreteCurve horizontal_lift_curve(const Connection& conn, const AdmissibleCurve& c,
                                           const EPoint& e, const TransportConfig& cfg = {}) {
  return horizontal_lift_curve(conn, c, e, c.a, c.b, cfg);
}

EPoint parallel_translate(const Connection& conn, const AdmissibleCurve& c, const EPoint& e,
                          double from_u, double to_u, const TransportConfig& cfg = {});
inline EPoint parallel_translate(const Connection& conn, const AdmissibleCurve& c, const EPoint& e,
                                 double to_u, const TransportConfig& cfg = {}) {
  return parallel_translate(conn, c, e, c.a, to_u, cfg);
}

// eta' = -Gamma^alpha_{a beta}(c_M(u)) eta^beta c^a(u) from u = a.
OdeSolution linear_transport_along(const AffineSplit& split, const CurveFn& c, double a, double b,
                                   const std::vector<double>& ebar, const TransportConfig& cfg = {});
std::vector<double> linear_parallel_translate(const AffineSplit& split, const AdmissibleCurve& c,
                                              const std::vector<double>& ebar, double to_u,
                                              const TransportConfig& cfg = {});

struct LieTransport {
  DiscreteCurve flow;                   // integral curve of h(s) through e
  std::vector<std::vector<double>> eta;  // transported vertical vector at each node

  const EPoint& end() const { return flow.points.back(); }
  const std::vector<double>& eta_end() const { return eta.back(); }
};

// Flow of h(s) over u in [0, span] with its fibre variational equation.
LieTransport lie_transport(const Connection& conn, const SectionV& s, const EPoint& e,
                           const std::vector<double>& ebar, double span, const TransportConfig& cfg = {});

// Same transport computed on the pulled-back bundle over the (tabulated)
// base integral curve, with the parameter adjoined as a coordinate.
std::vector<double> lie_transport_suspended(const Connection& conn, const SectionV& s, const EPoint& e,
                                            const std::vector<double>& ebar, double span,
                                            const TransportConfig& cfg = {});

struct DifferenceTransportReport {
  ResidualReport residuals;
  bool affine = false;
  std::string verdict;
  double witness_u = 0.0;

  bool pass() const { return affine && residuals.pass(); }
};

// |lift(e1) - lift(e2) - linear transport(e1 - e2)| along c. For a
// non-affine connection the linear part at y = 0 is used as the candidate
// and the report fails with verdict "not affine".
DifferenceTransportReport verify_difference_transport(const Connection& conn, const AdmissibleCurve& c, const EPoint& e1,
                         const EPoint& e2, const TransportConfig& cfg, const SampleBox& box);

// Direct Lie transport against the suspended route; for affine connections
// also against linear parallel transport along s composed with the base flow.
ResidualReport verify_lie_transport(const Connection& conn, const SectionV& s, const EPoint& e,
                            const std::vector<double>& ebar, double span, const TransportConfig& cfg,
                            const SampleBox& box);

}  // namespace gconn
