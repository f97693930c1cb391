#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "kcd/models/model.hpp"
#include "kcd/models/spin_chain.hpp"

namespace kcd {

// H = -(v/2)(sum X_n X_{n+1} + g sum Z_n), periodic; parameter g.
// Measure rho = 1/(2^n n), i.e. uniform(1/n).
inline ModelSpec tfim_spec(int n_s, double v) {
  require(n_s >= 2 && n_s % 2 == 0, ErrorKind::InvalidArgument,
          "transverse-field Ising chain needs an even number of sites, got " + std::to_string(n_s));
  ModelSpec m;
  m.name = "tfim";
  m.backend = Backend::PauliSum;
  m.site_count = n_s;
  m.fixed = {{"v", v}};
  m.measure = Measure::uniform(1.0 / n_s);
  const PauliSum xx = chain::bond(n_s, 'X', 'X', true);
  const PauliSum z = chain::field(n_s, 'Z');
  m.h = [=](const Params& p) { return OperatorExpr(-v / 2 * (xx + param(p, "g") * z)); };
  m.dh = [=](const Params&, const Params& pd) { return OperatorExpr(-v / 2 * param_or(pd, "g", 0.0) * z); };
  return m;
}

namespace tfim_ops {

// Normalized under rho = 1/(2^n n).
inline PauliSum magnetization(int n) { return chain::field(n, 'Z'); }

inline PauliSum vx(int n, int k) {
  PauliSum s(n);
  for (int j = 1; j <= n; ++j) s.add(chain::jw_string(n, j, k, 'X', 'X'));
  return s;
}

inline PauliSum vy(int n, int k) {
  PauliSum s(n);
  for (int j = 1; j <= n; ++j) s.add(chain::jw_string(n, j, k, 'Y', 'Y'));
  return s;
}

inline PauliSum w(int n, int k) {
  PauliSum s(n);
  const double c = 1.0 / std::sqrt(2.0);
  for (int j = 1; j <= n; ++j) {
    s.add(chain::jw_string(n, j, k, 'X', 'Y'), c);
    s.add(chain::jw_string(n, j, k, 'Y', 'X'), c);
  }
  return s;
}

// (-1)^P = prod_n Z_n.
inline PauliSum parity(int n) { return PauliSum(PauliString::parse(std::string(n, 'Z'))); }

}  // namespace tfim_ops

// Closed-form chain on the full operator space: d = 2 n - 1 with
// b_0 = v g'/2, b_1 = sqrt(2) v and the sum rules
// b_{2k-1}^2 + b_{2k}^2 = 4 v^2 (1 + g^2), b_{2k} b_{2k+1} = 4 v^2 g.
inline std::vector<double> tfim_analytic_b(int n_s, double v, double g, double g_dot) {
  require(n_s >= 2 && n_s % 2 == 0, ErrorKind::InvalidArgument, "odd n_s");
  const int d = 2 * n_s - 1;
  const double s = 4 * v * v * (1 + g * g), p = 4 * v * v * g;
  std::vector<double> b(d);
  b[0] = std::abs(v * g_dot) / 2;
  b[1] = std::sqrt(2.0) * std::abs(v);
  for (int n = 2; n < d; ++n) {
    if (n % 2 == 0)
      b[n] = std::sqrt(std::max(0.0, s - b[n - 1] * b[n - 1]));
    else
      b[n] = p / b[n - 1];
  }
  return b;
}

// alpha_k = sum_l (-b_1/lambda_l) <k|phi_l><phi_l|1> with
// lambda_l = 4 v^2 (1 + g^2 - 2 g cos(pi l/(d_A+1))) and
// <k|phi_l> = sqrt(2/(d_A+1)) (-1)^{k-1} sin(k pi l/(d_A+1)); d_A = n - 1.
inline std::vector<double> tfim_closed_form_alpha(int n_s, double v, double g) {
  const int da = n_s - 1;
  const double b1 = std::sqrt(2.0) * std::abs(v);
  const double q = std::numbers::pi / (da + 1);
  std::vector<double> alpha(da, 0.0);
  for (int k = 1; k <= da; ++k) {
    double s = 0.0;
    for (int l = 1; l <= da; ++l) {
      const double lam = 4 * v * v * (1 + g * g - 2 * g * std::cos(q * l));
      s += -b1 / lam * (2.0 / (da + 1)) * std::sin(k * q * l) * std::sin(q * l);
    }
    alpha[k - 1] = (k % 2 == 1 ? 1.0 : -1.0) * s;
  }
  return alpha;
}

// Linear ramp g(t) = g0 + (g1 - g0) t / t_f.
inline DrivingProtocol linear_ramp(const std::string& key, double g0, double g1, double t_f) {
  DrivingProtocol d;
  d.name = "linear_" + key;
  d.t_f = t_f;
  d.lambda = [=](double t) { return Params{{key, g0 + (g1 - g0) * t / t_f}}; };
  d.lambda_dot = [=](double) { return Params{{key, (g1 - g0) / t_f}}; };
  return d;
}

}  // namespace kcd
