#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kcd/krylov/lanczos.hpp"
#include "kcd/krylov/tridiagonal.hpp"

namespace kcd {

// A = i b_0 sum_k alpha_k O_{2k-1}.
struct AgpExpansion {
  std::vector<double> alpha;  // alpha_1..alpha_{d_A}
  double b0 = 0.0;
  OperatorExpr cd_operator;

  int d_A() const noexcept { return static_cast<int>(alpha.size()); }

  // (-1)^{k-1} b_0 alpha_k: the coefficient multiplying i (-1)^k O_{2k-1}, i.e.
  // the W_k coefficient for chains with O_{2k-1} = (-1)^k i W_k.
  std::vector<double> signed_coefficients() const {
    std::vector<double> c(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) c[k] = (k % 2 == 0 ? 1.0 : -1.0) * b0 * alpha[k];
    return c;
  }
};

namespace detail {

inline void check_positive(const std::vector<double>& b) {
  for (std::size_t n = 1; n < b.size(); ++n)
    require(b[n] > 0.0 && std::isfinite(b[n]), ErrorKind::InvalidArgument,
            "Lanczos coefficient b_" + std::to_string(n) + " is not positive");
}

}  // namespace detail

// Even d: alpha_1 = -1/b_1, alpha_{k+1} = -(b_{2k}/b_{2k+1}) alpha_k.
// b holds b_0..b_{d-1}; b_0 is not used.
inline std::vector<double> solve_alpha_even(const std::vector<double>& b) {
  const int d = static_cast<int>(b.size());
  require(d % 2 == 0, ErrorKind::WrongRoute, "even-d recurrence called with d = " + std::to_string(d));
  detail::check_positive(b);
  std::vector<double> alpha(d / 2);
  if (alpha.empty()) return alpha;
  alpha[0] = -1.0 / b[1];
  for (int k = 1; k < d / 2; ++k) alpha[k] = -(b[2 * k] / b[2 * k + 1]) * alpha[k - 1];
  return alpha;
}

// Odd d: K alpha = (-b_1, 0, ..., 0) with K_kk = b_{2k-1}^2 + b_{2k}^2 and
// K_{k,k+1} = b_{2k} b_{2k+1}.
inline std::vector<double> solve_alpha_odd_tridiagonal(const std::vector<double>& b) {
  const int d = static_cast<int>(b.size());
  require(d % 2 == 1, ErrorKind::WrongRoute, "odd-d solver called with d = " + std::to_string(d));
  detail::check_positive(b);
  const int da = d / 2;
  if (da == 0) return {};
  std::vector<double> diag(da), off(da - 1);
  for (int k = 1; k <= da; ++k) diag[k - 1] = b[2 * k - 1] * b[2 * k - 1] + b[2 * k] * b[2 * k];
  for (int k = 1; k < da; ++k) off[k - 1] = b[2 * k] * b[2 * k + 1];
  RealVector rhs = RealVector::Zero(da);
  rhs[0] = -b[1];
  const RealVector a = solve_symmetric_tridiagonal(diag, off, rhs);
  return {a.data(), a.data() + a.size()};
}

// Normalized null vector of B (odd d): (1, 0, b1/b2, 0, b1 b3/(b2 b4), ...).
inline RealVector zero_mode(const std::vector<double>& b) {
  const int d = static_cast<int>(b.size());
  require(d % 2 == 1, ErrorKind::WrongRoute, "zero mode exists only for odd d");
  detail::check_positive(b);
  RealVector phi = RealVector::Zero(d);
  phi[0] = 1.0;
  for (int k = 1; 2 * k < d; ++k) phi[2 * k] = phi[2 * k - 2] * b[2 * k - 1] / b[2 * k];
  return phi / phi.norm();
}

struct ZeroModeSolution {
  std::vector<double> alpha;
  RealVector phi;
};

// Odd d through the zero mode. Row 2k of T a = -e_0 + phi_0 phi reads
//   b_{2k} alpha_k + b_{2k+1} alpha_{k+1} = (-1)^k phi_{2k} phi_0,
// with alpha_0 = alpha_{d_A+1} = 0, so it can be swept from either end.
// Forward multiplies errors by b_{2k}/b_{2k+1} per step, backward by the
// inverse; each alpha_k is taken from the sweep with the smaller growth.
inline ZeroModeSolution solve_alpha_odd_zero_mode(const std::vector<double>& b) {
  ZeroModeSolution out;
  out.phi = zero_mode(b);
  const int da = static_cast<int>(b.size()) / 2;
  out.alpha.resize(da);
  if (da == 0) return out;
  const RealVector& phi = out.phi;
  auto rhs = [&](int k) { return (k % 2 == 0 ? 1.0 : -1.0) * phi[2 * k] * phi[0]; };
  std::vector<double> fwd(da), bwd(da), fgrow(da), bgrow(da);
  fwd[0] = (rhs(0) - 1.0) / b[1];
  fgrow[0] = 1.0;
  for (int k = 1; k < da; ++k) {
    fwd[k] = (rhs(k) - b[2 * k] * fwd[k - 1]) / b[2 * k + 1];
    fgrow[k] = 1.0 + fgrow[k - 1] * b[2 * k] / b[2 * k + 1];
  }
  bwd[da - 1] = rhs(da) / b[2 * da];
  bgrow[da - 1] = 1.0;
  for (int k = da - 1; k >= 1; --k) {
    bwd[k - 1] = (rhs(k) - b[2 * k + 1] * bwd[k]) / b[2 * k];
    bgrow[k - 1] = 1.0 + bgrow[k] * b[2 * k + 1] / b[2 * k];
  }
  for (int k = 0; k < da; ++k) out.alpha[k] = fgrow[k] <= bgrow[k] ? fwd[k] : bwd[k];
  return out;
}

// Default route: recurrence for even d, tridiagonal solve for odd d.
inline std::vector<double> solve_alpha(const std::vector<double>& b) {
  if (b.size() <= 1) return {};
  return b.size() % 2 == 0 ? solve_alpha_even(b) : solve_alpha_odd_tridiagonal(b);
}

inline AgpExpansion assemble_cd(const KrylovChain& chain, const std::vector<double>& alpha) {
  require(static_cast<int>(alpha.size()) == chain.d_A(), ErrorKind::LengthMismatch,
          "expected " + std::to_string(chain.d_A()) + " coefficients, got " + std::to_string(alpha.size()));
  require(static_cast<int>(chain.basis.size()) == chain.d(), ErrorKind::InvalidArgument,
          "chain was built without keeping its basis");
  AgpExpansion out;
  out.alpha = alpha;
  out.b0 = chain.b0();
  out.cd_operator = chain.basis.front().zero_like();
  for (int k = 1; k <= chain.d_A(); ++k)
    out.cd_operator.axpy(cplx{0.0, chain.b0() * alpha[k - 1]}, chain.basis[2 * k - 1]);
  return out;
}

inline AgpExpansion krylov_cd(const KrylovChain& chain) { return assemble_cd(chain, solve_alpha(chain.b)); }

// Residuals of the defining equation in chain coordinates:
// r = |dH> - iL|A> = b_0 (e_0 + T a) with a_{2k-1} = alpha_k.
struct AgpResidual {
  double direct = 0.0;      // ||r||
  double projected = 0.0;   // ||L r||
};

inline AgpResidual agp_residual(const std::vector<double>& b, const std::vector<double>& alpha) {
  const int d = static_cast<int>(b.size());
  const RealMatrix t = TridiagonalT::from_chain_coefficients(b).dense();
  RealVector a = RealVector::Zero(d);
  for (std::size_t k = 1; k <= alpha.size(); ++k) a[2 * k - 1] = alpha[k - 1];
  RealVector r = t * a;
  r[0] += 1.0;
  r *= b[0];
  return {r.norm(), (t * r).norm()};
}

// <0| (Q T Q)^{-2} |0> with Q = 1 - |psi><psi| and psi the explicit null
// vector of T (odd d); for even d, Q = 1.
inline double projected_inverse_square(const std::vector<double>& b) {
  const int d = static_cast<int>(b.size());
  if (d <= 1) return 0.0;
  RealMatrix t = TridiagonalT::from_chain_coefficients(b).dense();
  RealVector e0 = RealVector::Zero(d);
  e0[0] = 1.0;
  if (d % 2 == 1) {
    // Null vector of T is the zero mode of B with alternating signs.
    RealVector psi = zero_mode(b);
    for (int k = 0; 2 * k < d; ++k)
      if (k % 2 == 1) psi[2 * k] = -psi[2 * k];
    const RealMatrix p = psi * psi.transpose();
    e0 -= p * e0;
    t += p;  // (T + P)^{-1} = T^+ + P, and P annihilates Q e0
  }
  const RealVector y = t.partialPivLu().solve(e0);
  return y.squaredNorm();
}

struct AgpNorm {
  double value = 0.0;           // b_0^2 sum alpha_k^2
  double via_projector = 0.0;   // b_0^2 <0|(QTQ)^{-2}|0>
};

// (A, A) in two forms; throws if they disagree beyond 1e-9 relative.
inline AgpNorm agp_norm(const std::vector<double>& b, const std::vector<double>& alpha) {
  AgpNorm out;
  if (b.empty()) return out;
  double s = 0.0;
  for (double a : alpha) s += a * a;
  out.value = b[0] * b[0] * s;
  // The projector form describes the exact solution; skip it for a zero alpha.
  if (s == 0.0) return out;
  out.via_projector = b[0] * b[0] * projected_inverse_square(b);
  require(std::abs(out.value - out.via_projector) <= 1e-9 * std::max(out.value, 1e-300),
          ErrorKind::NumericalBreakdown,
          "norm identity violated: " + std::to_string(out.value) + " vs " + std::to_string(out.via_projector));
  return out;
}

inline AgpNorm agp_norm(const KrylovChain& chain, const std::vector<double>& alpha) {
  return agp_norm(chain.b, alpha);
}

struct SpectralOracleOptions {
  double degeneracy_tol = 1e-10;  // relative to ||H||
  double coupling_tol = 1e-8;     // relative to ||dH||
};

// A_mn = i <m|dH|n> / (e_n - e_m) in the eigenbasis of H, zero on (near-)
// degenerate blocks, rotated back to the input basis.
inline ComplexMatrix spectral_agp_oracle(const ComplexMatrix& h, const ComplexMatrix& dh,
                                         const SpectralOracleOptions& opt = {}) {
  require(h.rows() == h.cols() && dh.rows() == h.rows() && dh.cols() == h.cols(),
          ErrorKind::SiteCountMismatch, "H and dH shapes");
  const Spectrum s = Spectrum::of(h);
  const RealVector& e = s.energies;
  const Eigen::Index n = e.size();
  const double hnorm = std::max(e.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> des(dh, Eigen::EigenvaluesOnly);
  const double dnorm = des.eigenvalues().cwiseAbs().maxCoeff();
  const ComplexMatrix d = s.vectors.adjoint() * dh * s.vectors;

  // Cluster consecutive levels closer than the degeneracy tolerance.
  std::vector<Eigen::Index> cluster(n, 0);
  for (Eigen::Index i = 1; i < n; ++i)
    cluster[i] = cluster[i - 1] + ((e[i] - e[i - 1]) >= opt.degeneracy_tol * hnorm ? 1 : 0);

  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && cluster[j + 1] == cluster[i]) ++j;
    if (j > i) {
      const auto m = j - i + 1;
      const ComplexMatrix blk = d.block(i, i, m, m);
      const cplx mean = blk.trace() / static_cast<double>(m);
      const ComplexMatrix dev = blk - mean * ComplexMatrix::Identity(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index c = 0; c < m; ++c)
          require(std::abs(dev(a, c)) <= opt.coupling_tol * std::max(dnorm, 1e-300), ErrorKind::IllDefinedAgp,
                  "degenerate levels " + std::to_string(i + a) + " and " + std::to_string(i + c) +
                      " are coupled by dH");
    }
    i = j + 1;
  }

  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m)
    for (Eigen::Index k = 0; k < n; ++k)
      if (cluster[m] != cluster[k]) a(m, k) = cplx{0.0, 1.0} * d(m, k) / (e[k] - e[m]);
  return s.vectors * a * s.vectors.adjoint();
}

}  // namespace kcd
