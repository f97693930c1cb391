#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "kcd/models/model.hpp"

namespace kcd {

namespace pauli2 {

inline ComplexMatrix x() { return (ComplexMatrix(2, 2) << 0, 1, 1, 0).finished(); }
inline ComplexMatrix y() { return (ComplexMatrix(2, 2) << 0, cplx{0, -1}, cplx{0, 1}, 0).finished(); }
inline ComplexMatrix z() { return (ComplexMatrix(2, 2) << 1, 0, 0, -1).finished(); }

inline ComplexMatrix dot(const Eigen::Vector3d& v) { return v[0] * x() + v[1] * y() + v[2] * z(); }

}  // namespace pauli2

// H = (h/2) n.Sigma with n = (nx, ny, nz) / |.|.
inline ModelSpec two_level_spec() {
  ModelSpec m;
  m.name = "two_level";
  m.backend = Backend::Dense;
  m.site_count = 1;
  auto dir = [](const Params& p) {
    return Eigen::Vector3d(param(p, "nx"), param(p, "ny"), param(p, "nz"));
  };
  m.h = [dir](const Params& p) {
    const double h = param(p, "h");
    require(h > 0.0, ErrorKind::InvalidArgument, "two-level splitting h must be positive");
    const Eigen::Vector3d n = dir(p).normalized();
    return OperatorExpr(ComplexMatrix(0.5 * h * pauli2::dot(n)), 1);
  };
  m.dh = [dir](const Params& p, const Params& pd) {
    const double h = param(p, "h");
    const Eigen::Vector3d raw = dir(p);
    const double len = raw.norm();
    const Eigen::Vector3d n = raw / len;
    const Eigen::Vector3d nd_raw(param_or(pd, "nx", 0.0), param_or(pd, "ny", 0.0), param_or(pd, "nz", 0.0));
    const Eigen::Vector3d nd = (nd_raw - n.dot(nd_raw) * n) / len;
    const double hd = param_or(pd, "h", 0.0);
    return OperatorExpr(ComplexMatrix(0.5 * pauli2::dot(hd * n + h * nd)), 1);
  };
  return m;
}

struct TwoLevelCase {
  ModelSpec spec;
  Params p, pdot;
  Eigen::Vector3d n, ndot;  // after projection
  double h = 0.0, hdot = 0.0;
  ComplexMatrix reference_cd;  // (1/2) n x ndot . Sigma
  double b1 = 0.0, b2 = 0.0;   // closed-form Lanczos coefficients
};

// Point-wise case; n is normalized and ndot projected onto the tangent plane.
inline TwoLevelCase two_level(double h, Eigen::Vector3d n, double hdot, Eigen::Vector3d ndot) {
  require(h > 0.0, ErrorKind::InvalidArgument, "two-level splitting h must be positive");
  require(n.norm() > 0.0, ErrorKind::InvalidArgument, "direction vector vanishes");
  TwoLevelCase c;
  c.spec = two_level_spec();
  n.normalize();
  ndot -= n.dot(ndot) * n;
  c.n = n;
  c.ndot = ndot;
  c.h = h;
  c.hdot = hdot;
  c.p = {{"h", h}, {"nx", n[0]}, {"ny", n[1]}, {"nz", n[2]}};
  c.pdot = {{"h", hdot}, {"nx", ndot[0]}, {"ny", ndot[1]}, {"nz", ndot[2]}};
  c.reference_cd = 0.5 * pauli2::dot(n.cross(ndot));
  const double nd = ndot.norm();
  const double den = std::sqrt(hdot * hdot + h * h * nd * nd);
  if (den > 0.0) {
    c.b1 = h * h * nd / den;
    c.b2 = h * std::abs(hdot) / den;
  }
  return c;
}

// Rotation of n through the xz-plane by pi with a modulated splitting:
// theta = pi t/t_f, h = h0 (1 + a sin(pi t/t_f)).
inline DrivingProtocol two_level_sweep(double h0, double t_f, double a = 0.5) {
  DrivingProtocol d;
  d.name = "two_level_sweep";
  d.t_f = t_f;
  const double w = std::numbers::pi / t_f;
  d.lambda = [=](double t) {
    const double th = w * t;
    return Params{{"h", h0 * (1.0 + a * std::sin(th))}, {"nx", std::sin(th)}, {"ny", 0.0}, {"nz", std::cos(th)}};
  };
  d.lambda_dot = [=](double t) {
    const double th = w * t;
    return Params{{"h", h0 * a * w * std::cos(th)}, {"nx", w * std::cos(th)}, {"ny", 0.0}, {"nz", -w * std::sin(th)}};
  };
  return d;
}

}  // namespace kcd
