#pragma once

#include <cmath>
#include <memory>

#include "kcd/models/model.hpp"

namespace kcd {

namespace detail {

inline ComplexMatrix unit3(int i, int j) {
  ComplexMatrix e = ComplexMatrix::Zero(3, 3);
  e(i, j) = 1.0;
  return e;
}

inline ComplexMatrix stirap_h(double delta, double wp, double ws) {
  ComplexMatrix h = ComplexMatrix::Zero(3, 3);
  h(0, 1) = h(1, 0) = 0.5 * wp;
  h(1, 2) = h(2, 1) = 0.5 * ws;
  h(1, 1) = delta;
  return h;
}

}  // namespace detail

// Five X and three Y operators, orthonormal under rho = 1/2 (uniform(3/2)).
inline std::shared_ptr<const BasisDeclaration> stirap_basis() {
  using detail::unit3;
  const cplx i{0.0, 1.0};
  std::vector<OperatorExpr> els{
      OperatorExpr(ComplexMatrix(unit3(0, 1) + unit3(1, 0))),
      OperatorExpr(ComplexMatrix(unit3(1, 2) + unit3(2, 1))),
      OperatorExpr(ComplexMatrix(unit3(0, 2) + unit3(2, 0))),
      OperatorExpr(ComplexMatrix(unit3(0, 0) - unit3(1, 1))),
      OperatorExpr(ComplexMatrix((unit3(0, 0) + unit3(1, 1) - 2.0 * unit3(2, 2)) / std::sqrt(3.0))),
      OperatorExpr(ComplexMatrix(-i * unit3(0, 1) + i * unit3(1, 0))),
      OperatorExpr(ComplexMatrix(-i * unit3(1, 2) + i * unit3(2, 1))),
      OperatorExpr(ComplexMatrix(-i * unit3(0, 2) + i * unit3(2, 0))),
  };
  std::vector<Sector> s(5, Sector::Even);
  s.insert(s.end(), 3, Sector::Odd);
  auto decl = BasisDeclaration::of(std::move(els), std::move(s));
  decl.with_labels({"X1", "X2", "X3", "X4", "X5", "Y1", "Y2", "Y3"});
  return std::make_shared<const BasisDeclaration>(std::move(decl));
}

inline Measure stirap_measure() { return Measure::uniform(1.5); }

// Closed-form M block; the (X5, Y2) entry is sqrt(3) ws / 2 for the
// normalized X5 = diag(1, 1, -2)/sqrt(3).
inline ComplexMatrix stirap_m_block(double delta, double wp, double ws) {
  RealMatrix m(5, 3);
  m << delta, 0, ws / 2,
       0, -delta, -wp / 2,
       ws / 2, -wp / 2, 0,
       wp, -ws / 2, 0,
       0, std::sqrt(3.0) * ws / 2, 0;
  return cplx{0.0, 1.0} * m.cast<cplx>();
}

inline ModelSpec stirap_spec() {
  ModelSpec m;
  m.name = "stirap";
  m.backend = Backend::Dense;
  m.measure = stirap_measure();
  m.h = [](const Params& p) {
    return OperatorExpr(detail::stirap_h(param(p, "delta"), param(p, "wp"), param(p, "ws")));
  };
  m.dh = [](const Params&, const Params& pd) {
    return OperatorExpr(
        detail::stirap_h(param_or(pd, "delta", 0.0), param_or(pd, "wp", 0.0), param_or(pd, "ws", 0.0)));
  };
  return m;
}

struct StirapCase {
  double delta = 0.0, wp = 0.0, ws = 0.0;
  double delta_dot = 0.0, wp_dot = 0.0, ws_dot = 0.0;
  ComplexMatrix h, dh;
  std::shared_ptr<const BasisDeclaration> basis;
  LiouvillianMatrix l;
  ComplexVector theta0;
  double b0 = 0.0;
  double theta = 0.0, theta_dot = 0.0, phi = 0.0, phi_dot = 0.0;
  RealVector reference_y;      // H_CD = sum_mu a_mu Y_mu from the angle parametrization
  ComplexMatrix reference_cd;  // same, dense
};

// theta = atan(wp/ws), phi = atan(sqrt(wp^2 + ws^2)/delta)/2 and
// H_CD = -phi' sin(theta) Y1 + phi' cos(theta) Y2 - theta' Y3.
inline StirapCase stirap(double delta, double wp, double ws, double delta_dot, double wp_dot, double ws_dot) {
  StirapCase c;
  c.delta = delta;
  c.wp = wp;
  c.ws = ws;
  c.delta_dot = delta_dot;
  c.wp_dot = wp_dot;
  c.ws_dot = ws_dot;
  c.h = detail::stirap_h(delta, wp, ws);
  c.dh = detail::stirap_h(delta_dot, wp_dot, ws_dot);
  c.basis = stirap_basis();
  c.l = build_liouvillian_matrix(OperatorExpr(c.h), c.basis, stirap_measure());
  c.theta0 = coordinates(*c.basis, OperatorExpr(c.dh), stirap_measure());
  c.b0 = c.theta0.norm();
  if (c.b0 > 0.0) c.theta0 /= c.b0;

  const double om2 = wp * wp + ws * ws;
  const double om = std::sqrt(om2);
  c.theta = std::atan2(wp, ws);
  c.theta_dot = om2 > 0.0 ? (wp_dot * ws - wp * ws_dot) / om2 : 0.0;
  c.phi = 0.5 * std::atan2(om, delta);
  const double om_dot = om > 0.0 ? (wp * wp_dot + ws * ws_dot) / om : 0.0;
  c.phi_dot = 0.5 * (delta * om_dot - om * delta_dot) / (delta * delta + om2);
  c.reference_y = RealVector(3);
  c.reference_y << -c.phi_dot * std::sin(c.theta), c.phi_dot * std::cos(c.theta), -c.theta_dot;
  c.reference_cd = ComplexMatrix::Zero(3, 3);
  for (int mu = 0; mu < 3; ++mu) c.reference_cd += c.reference_y[mu] * c.basis->element(5 + mu).dense();
  return c;
}

struct StirapPulses {
  double delta = 1.0;
  double t_f = 100.0;
  double omega0 = 4.0;
  double t1 = 40.0;  // Stokes centre
  double t2 = 60.0;  // pump centre
  double sigma = 10.0;
};

// ws = w0 exp(-(t - t1)^2 / 2 sigma^2), wp = w0 exp(-(t - t2)^2 / 2 sigma^2).
inline DrivingProtocol stirap_protocol(const StirapPulses& s = {}) {
  DrivingProtocol d;
  d.name = "stirap_gaussian";
  d.t_f = s.t_f;
  auto pulse = [](double w0, double tc, double sg, double t) {
    return w0 * std::exp(-(t - tc) * (t - tc) / (2 * sg * sg));
  };
  d.lambda = [=](double t) {
    return Params{{"delta", s.delta}, {"wp", pulse(s.omega0, s.t2, s.sigma, t)},
                  {"ws", pulse(s.omega0, s.t1, s.sigma, t)}};
  };
  d.lambda_dot = [=](double t) {
    return Params{{"delta", 0.0},
                  {"wp", -(t - s.t2) / (s.sigma * s.sigma) * pulse(s.omega0, s.t2, s.sigma, t)},
                  {"ws", -(t - s.t1) / (s.sigma * s.sigma) * pulse(s.omega0, s.t1, s.sigma, t)}};
  };
  return d;
}

// Pulses scaled to a different duration with the same shape (t1, t2, sigma
// fixed fractions of t_f).
inline StirapPulses stirap_pulses_for(double t_f, double delta = 1.0, double omega0 = 4.0) {
  return {delta, t_f, omega0, 0.4 * t_f, 0.6 * t_f, 0.1 * t_f};
}

}  // namespace kcd
