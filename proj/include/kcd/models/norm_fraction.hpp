#pragma once

#include <bit>
#include <vector>

#include "kcd/agp/solver.hpp"

namespace kcd {

// How p (the body count) is assigned to a basis direction.
enum class BodyRule {
  Declared,       // body counts attached to a structured basis
  Support,        // Pauli string support length on an open chain
  CyclicSupport,  // shortest arc covering the string on a ring
};

inline int cyclic_support(std::uint64_t mask, int n) {
  if (mask == 0) return 0;
  // Longest cyclic run of identity sites; the support is the complement.
  int longest = 0, run = 0;
  for (int j = 0; j < 2 * n; ++j) {
    if (mask >> (j % n) & 1) {
      run = 0;
    } else {
      longest = std::max(longest, ++run);
    }
  }
  return n - std::min(longest, n);
}

// Squared norm of op split by body count: entry p holds the weight of the
// p-body directions.
inline std::vector<double> body_weights(const OperatorExpr& op, const Measure& rho, BodyRule rule) {
  std::vector<double> w;
  auto add = [&w](int p, double x) {
    if (static_cast<int>(w.size()) <= p) w.resize(p + 1, 0.0);
    w[p] += x;
  };
  if (op.is_structured()) {
    require(rule == BodyRule::Declared, ErrorKind::InvalidArgument, "structured operators use declared body counts");
    const auto& s = op.structured();
    const auto& body = s.basis->body_counts();
    require(body.size() == s.basis->size(), ErrorKind::InvalidArgument, "basis has no body counts");
    for (Eigen::Index i = 0; i < s.coords.size(); ++i) add(body[i], std::norm(s.coords[i]));
    return w;
  }
  require(op.is_pauli() && rho.is_uniform(), ErrorKind::BackendMismatch,
          "body decomposition needs a structured operator or a Pauli sum under a uniform measure");
  require(rule != BodyRule::Declared, ErrorKind::InvalidArgument, "Pauli sums have no declared body counts");
  const int n = op.site_count();
  for (const auto& t : op.pauli().terms()) {
    const std::uint64_t m = t.x | t.z;
    const int p = rule == BodyRule::Support
                      ? (m == 0 ? 0 : 64 - std::countl_zero(m) - std::countr_zero(m))
                      : cyclic_support(m, n);
    add(p, rho.scale() * std::norm(t.c));
  }
  return w;
}

namespace detail {

inline std::vector<double> normalized(std::vector<double> w) {
  double s = 0.0;
  for (double x : w) s += x;
  if (s > 0.0)
    for (double& x : w) x /= s;
  return w;
}

}  // namespace detail

// q^(p) = sum_k alpha_k^2 |theta_{2k-1}^(p)|^2 / sum_k alpha_k^2, with
// theta^(p) the p-body part of each odd chain vector.
inline std::vector<double> norm_fraction(const AgpExpansion& e, const KrylovChain& chain, BodyRule rule) {
  require(static_cast<int>(chain.basis.size()) == chain.d(), ErrorKind::InvalidArgument,
          "norm fraction needs the chain basis");
  require(e.d_A() == chain.d_A(), ErrorKind::LengthMismatch, "expansion does not match the chain");
  std::vector<double> q;
  for (int k = 1; k <= e.d_A(); ++k) {
    const auto w = body_weights(chain.basis[2 * k - 1], chain.measure, rule);
    if (q.size() < w.size()) q.resize(w.size(), 0.0);
    for (std::size_t p = 0; p < w.size(); ++p) q[p] += e.alpha[k - 1] * e.alpha[k - 1] * w[p];
  }
  return detail::normalized(std::move(q));
}

// Body-count split of the assembled CD operator itself; differs from the
// chain-term form by the cross terms between different k.
inline std::vector<double> norm_fraction_projected(const AgpExpansion& e, const Measure& rho, BodyRule rule) {
  return detail::normalized(body_weights(e.cd_operator, rho, rule));
}

}  // namespace kcd
