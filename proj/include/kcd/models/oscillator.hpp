#pragma once

#include <array>
#include <cmath>
#include <memory>

#include "kcd/models/model.hpp"

namespace kcd {

struct OscillatorCase {
  double m = 1.0, omega = 1.0, q0 = 0.0, omega_dot = 0.0, q0_dot = 0.0;
  int cutoff = 120;
  Measure measure = Measure::gibbs(1.0);  // bound to h

  ComplexMatrix h;   // instantaneous Fock basis: omega (n + 1/2)
  ComplexMatrix dh;
  std::shared_ptr<const BasisDeclaration> basis;  // X1, X2, X3; Y1, Y2
  std::array<double, 5> raw_norms{};               // sqrt<(.)^2> of the unnormalized operators
  LiouvillianMatrix l;
  ComplexVector theta0;  // normalized coordinates of dH
  double b0 = 0.0;
  ComplexVector reference_cd;  // q0' P - (omega'/4 omega)(P(Q-q0) + (Q-q0)P) on the basis

  // (x, y, z) = theta0 restricted to X.
  std::array<double, 3> xyz() const { return {theta0[0].real(), theta0[1].real(), theta0[2].real()}; }

  // Closed-form b_1..b_4 in terms of (x, y, z).
  std::array<double, 4> closed_form_b() const {
    const auto [x, y, z] = xyz();
    const double s = y * y + 4 * z * z;
    const double u = y * y + 16 * z * z - s * s;
    return {omega * std::sqrt(s), omega * std::sqrt(u / s), 6 * omega * std::abs(y * z) / std::sqrt(s * u),
            2 * omega * std::abs(x) * std::sqrt(s / u)};
  }

  // Weight r of the first chain term, i b0 alpha_1 O_1 = r q0' P - 4 r (omega'/4 omega)(PQ + QP).
  double first_term_weight() const {
    const double z1 = m * omega / 2 * raw_norms[3] * raw_norms[3];  // <P^2>
    const double z2 = raw_norms[4] * raw_norms[4];
    const double wr = omega_dot / omega;
    return (q0_dot * q0_dot * z1 + wr * wr / 4 * z2) / (q0_dot * q0_dot * z1 + wr * wr * z2);
  }

  // Expected Krylov dimension from which derivatives vanish.
  int expected_dimension() const {
    if (q0_dot != 0.0 && omega_dot != 0.0) return 5;
    if (omega_dot != 0.0) return 3;
    if (q0_dot != 0.0) return 2;
    return 0;
  }
};

namespace detail {

inline ComplexMatrix annihilation(int n) {
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

}  // namespace detail

// Driven oscillator H = P^2/2m + m omega^2 (Q - q0)^2 / 2 on the five-operator
// basis, evaluated in the instantaneous Fock basis truncated at `cutoff`.
inline OscillatorCase harmonic_oscillator(double m, double omega, double q0, double omega_dot, double q0_dot,
                                          int cutoff = 120, Measure rho = Measure::gibbs(1.0)) {
  require(omega > 0.0 && m > 0.0, ErrorKind::InvalidArgument, "oscillator needs m > 0 and omega > 0");
  require(cutoff >= 40, ErrorKind::InvalidArgument, "Fock cutoff must be at least 40");
  OscillatorCase c;
  c.m = m;
  c.omega = omega;
  c.q0 = q0;
  c.omega_dot = omega_dot;
  c.q0_dot = q0_dot;
  c.cutoff = cutoff;

  const int n = cutoff;
  const ComplexMatrix a = detail::annihilation(n), ad = a.adjoint();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix num = ad * a + 0.5 * id;
  c.h = omega * num;
  c.measure = rho.bound_to(c.h);

  const RealVector w = c.measure.weights(c.h.diagonal().real());
  const double top = w.tail(n - (3 * n) / 4).sum();
  require(top < 1e-8, ErrorKind::InvalidMeasure,
          "Fock cutoff too small: top-quarter occupancy " + std::to_string(top));

  const cplx i{0.0, 1.0};
  const std::array<ComplexMatrix, 5> raw{num, ad + a, ad * ad + a * a, i * (ad - a), i * (ad * ad - a * a)};
  std::vector<OperatorExpr> els;
  for (int k = 0; k < 5; ++k) {
    c.raw_norms[k] = operator_norm(OperatorExpr(raw[k]), c.measure);
    els.emplace_back(ComplexMatrix(raw[k] / c.raw_norms[k]));
  }
  auto decl = BasisDeclaration::of(els, {Sector::Even, Sector::Even, Sector::Even, Sector::Odd, Sector::Odd});
  decl.with_labels({"X1", "X2", "X3", "Y1", "Y2"}).with_body_counts({1, 1, 1, 1, 1});
  c.basis = std::make_shared<const BasisDeclaration>(std::move(decl));

  c.dh = omega_dot * num - q0_dot * std::sqrt(m * omega * omega * omega / 2) * raw[1] + omega_dot / 2 * raw[2];
  c.l = build_liouvillian_matrix(OperatorExpr(c.h), c.basis, c.measure);
  c.theta0 = coordinates(*c.basis, OperatorExpr(c.dh), c.measure);
  c.b0 = c.theta0.norm();
  if (c.b0 > 0.0) c.theta0 /= c.b0;

  c.reference_cd = ComplexVector::Zero(5);
  c.reference_cd[3] = q0_dot * std::sqrt(m * omega / 2) * c.raw_norms[3];
  c.reference_cd[4] = -omega_dot / (4 * omega) * c.raw_norms[4];
  return c;
}

// The same family on a fixed Fock basis (reference frequency omega_ref) for
// derivative checks; parameters m (fixed), omega, q0.
inline ModelSpec harmonic_oscillator_fixed_basis(double m, int cutoff, double omega_ref = 1.0) {
  const ComplexMatrix a = detail::annihilation(cutoff), ad = a.adjoint();
  const ComplexMatrix q = (a + ad) / std::sqrt(2 * m * omega_ref);
  const ComplexMatrix p = cplx{0.0, 1.0} * std::sqrt(m * omega_ref / 2) * (ad - a);
  const ComplexMatrix id = ComplexMatrix::Identity(cutoff, cutoff);
  ModelSpec s;
  s.name = "harmonic_oscillator";
  s.backend = Backend::Dense;
  s.fixed = {{"m", m}};
  s.h = [=](const Params& pr) {
    const double w = param(pr, "omega"), q0 = param(pr, "q0");
    const ComplexMatrix dq = q - q0 * id;
    return OperatorExpr(ComplexMatrix(p * p / (2 * m) + 0.5 * m * w * w * dq * dq));
  };
  s.dh = [=](const Params& pr, const Params& pd) {
    const double w = param(pr, "omega"), q0 = param(pr, "q0");
    const double wd = param_or(pd, "omega", 0.0), qd = param_or(pd, "q0", 0.0);
    const ComplexMatrix dq = q - q0 * id;
    return OperatorExpr(ComplexMatrix(m * w * wd * dq * dq - m * w * w * qd * dq));
  };
  return s;
}

}  // namespace kcd
