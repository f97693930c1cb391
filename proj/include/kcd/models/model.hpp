#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "kcd/core/operator.hpp"

namespace kcd {

using Params = std::map<std::string, double>;

inline double param(const Params& p, const std::string& key) {
  auto it = p.find(key);
  require(it != p.end(), ErrorKind::InvalidArgument, "missing parameter '" + key + "'");
  return it->second;
}

inline double param_or(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

// p + s * dp over the keys of dp; keys absent from dp are held fixed.
inline Params displaced(Params p, const Params& dp, double s) {
  for (const auto& [k, v] : dp) p[k] += s * v;
  return p;
}

// A parametrized Hamiltonian family. dh(p, pdot) is the directional
// derivative of H along pdot (time derivative when pdot = dlambda/dt).
struct ModelSpec {
  std::string name;
  Backend backend = Backend::Dense;
  int site_count = 0;
  Params fixed;  // parameters that do not change along a protocol
  std::function<OperatorExpr(const Params&)> h;
  std::function<OperatorExpr(const Params&, const Params&)> dh;
  Measure measure = Measure::uniform();
};

// ||(H(p + eps pdot) - H(p - eps pdot)) / 2 eps - dH|| / ||dH|| in the dense
// Frobenius norm.
inline double finite_difference_error(const ModelSpec& m, const Params& p, const Params& pdot,
                                      double eps = 1e-5) {
  const ComplexMatrix hp = to_dense(m.h(displaced(p, pdot, eps))).dense();
  const ComplexMatrix hm = to_dense(m.h(displaced(p, pdot, -eps))).dense();
  const ComplexMatrix d = to_dense(m.dh(p, pdot)).dense();
  const double dn = d.norm();
  const double err = ((hp - hm) / (2.0 * eps) - d).norm();
  return dn > 0.0 ? err / dn : err;
}

// Schedule lambda(t) with its analytic derivative.
struct DrivingProtocol {
  std::string name;
  double t_f = 1.0;
  std::function<Params(double)> lambda;
  std::function<Params(double)> lambda_dot;
};

struct ProtocolPoint {
  Params p;
  Params pdot;
};

inline ProtocolPoint at(const DrivingProtocol& proto, double t) { return {proto.lambda(t), proto.lambda_dot(t)}; }

// Checks lambda_dot against a central difference of lambda (relative to the
// largest derivative component, or absolute when all vanish).
inline double protocol_derivative_error(const DrivingProtocol& proto, double t, double eps = 1e-6) {
  const Params a = proto.lambda(t + eps), b = proto.lambda(t - eps), d = proto.lambda_dot(t);
  double err = 0.0, scale = 0.0;
  for (const auto& [k, v] : d) {
    err = std::max(err, std::abs((param(a, k) - param(b, k)) / (2.0 * eps) - v));
    scale = std::max(scale, std::abs(v));
  }
  return scale > 0.0 ? err / scale : err;
}

}  // namespace kcd
