#pragma once

#include <cmath>
#include <vector>

#include "kcd/models/model.hpp"
#include "kcd/models/spin_chain.hpp"

namespace kcd {

// H = g (-v sum Z_n Z_{n+1} - h sum Z_n) + (1 - g)(-gamma sum X_n), periodic,
// with rho = 1/(2^n n). Parameter g; g(t) = t/t_f along the annealing ramp.
inline ModelSpec ising_longitudinal_spec(int n_s, double v, double h, double gamma) {
  require(n_s >= 2, ErrorKind::InvalidArgument, "chain needs at least two sites");
  ModelSpec m;
  m.name = "ising_longitudinal";
  m.backend = Backend::PauliSum;
  m.site_count = n_s;
  m.fixed = {{"v", v}, {"h", h}, {"gamma", gamma}};
  m.measure = Measure::uniform(1.0 / n_s);
  const PauliSum problem = -v * chain::bond(n_s, 'Z', 'Z', true) - h * chain::field(n_s, 'Z');
  const PauliSum driver = -gamma * chain::field(n_s, 'X');
  m.h = [=](const Params& p) {
    const double g = param(p, "g");
    return OperatorExpr(g * problem + (1 - g) * driver);
  };
  m.dh = [=](const Params&, const Params& pd) {
    return OperatorExpr(param_or(pd, "g", 0.0) * (problem - driver));
  };
  return m;
}

namespace ising_ops {

inline PauliSum symmetric_bond(int n, char a, char b) {
  PauliSum s = chain::bond(n, a, b, true) + chain::bond(n, b, a, true);
  return (1.0 / std::sqrt(2.0)) * s;
}

// Three-term restricted Y basis: sum Y, (YZ + ZY)/sqrt2, (YX + XY)/sqrt2.
inline std::vector<PauliSum> restricted_y(int n) {
  return {chain::field(n, 'Y'), symmetric_bond(n, 'Y', 'Z'), symmetric_bond(n, 'Y', 'X')};
}

inline PauliSum three_site(int n, char a, char b, char c) {
  PauliSum s(n);
  for (int j = 1; j <= n; ++j) s.add(chain::string_at(n, {{j - 1, a}, {j, b}, {j + 1, c}}));
  return s;
}

// The nine-element X basis closing L on the restricted Y basis.
inline std::vector<PauliSum> closing_x(int n) {
  const double r = 1.0 / std::sqrt(2.0);
  return {chain::field(n, 'Z'),
          chain::field(n, 'X'),
          chain::bond(n, 'Z', 'Z', true),
          chain::bond(n, 'X', 'X', true),
          chain::bond(n, 'Y', 'Y', true),
          symmetric_bond(n, 'Z', 'X'),
          three_site(n, 'Z', 'X', 'Z'),
          r * (three_site(n, 'Z', 'X', 'X') + three_site(n, 'X', 'X', 'Z')),
          r * (three_site(n, 'Z', 'Y', 'Y') + three_site(n, 'Y', 'Y', 'Z'))};
}

}  // namespace ising_ops

// Coefficients (a_1, a_2, a_3) in H_CD = a_1 Y_1 + sqrt2 a_2 Y_2 + sqrt2 a_3 Y_3
// from coordinates c on the normalized restricted basis.
inline std::vector<double> ising_display_coefficients(const std::vector<double>& c) {
  require(c.size() == 3, ErrorKind::LengthMismatch, "restricted basis has three elements");
  return {c[0], c[1] / std::sqrt(2.0), c[2] / std::sqrt(2.0)};
}

}  // namespace kcd
