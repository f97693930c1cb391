#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kcd/agp/solver.hpp"

namespace kcd {

// Generator of the operator wave function, d/ds phi = B phi, with
// superdiagonal -b_n and subdiagonal +b_n.
struct BMatrix {
  std::vector<double> b;  // b_0..b_{d-1}; b_0 unused

  int dim() const noexcept { return static_cast<int>(b.size()); }

  RealMatrix dense() const {
    const int d = dim();
    RealMatrix m = RealMatrix::Zero(d, d);
    for (int n = 1; n < d; ++n) {
      m(n - 1, n) = -b[n];
      m(n, n - 1) = b[n];
    }
    return m;
  }

  // Z = diag(1, -1, 1, ...), which anticommutes with B.
  RealMatrix parity() const {
    RealVector z(dim());
    for (int n = 0; n < dim(); ++n) z[n] = n % 2 == 0 ? 1.0 : -1.0;
    return z.asDiagonal();
  }
};

// Spectrum of the Hermitian matrix iB; eigenvalues ascending, paired as +/-.
struct BEigensystem {
  RealVector omega;
  ComplexMatrix vectors;
};

inline BEigensystem eigensystem(const BMatrix& bm) {
  const ComplexMatrix ib = cplx{0.0, 1.0} * bm.dense().cast<cplx>();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(ib);
  require(es.info() == Eigen::Success, ErrorKind::NumericalBreakdown, "iB eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// phi(s) = exp(sB) e_0 from the eigen-decomposition of iB.
inline RealVector evolve_wavefunction(const BMatrix& bm, double s) {
  const BEigensystem es = eigensystem(bm);
  const int d = bm.dim();
  ComplexVector phi = ComplexVector::Zero(d);
  for (int j = 0; j < d; ++j)
    phi += std::exp(cplx{0.0, -es.omega[j] * s}) * std::conj(es.vectors(0, j)) * es.vectors.col(j);
  return phi.real();
}

// alpha_k from the s -> infinity limit of the regularized transform of the
// wave function: (-1)^k alpha_k = sum_{omega_n > 0} (2 / (i omega_n))
// <2k-1|omega_n><omega_n|0>. The positive half of the spectrum is taken as the
// top floor(d/2) eigenvalues, which pair with the bottom ones.
inline std::vector<double> alpha_via_laplace(const BMatrix& bm) {
  const int d = bm.dim();
  const int da = d / 2;
  std::vector<double> alpha(da, 0.0);
  if (da == 0) return alpha;
  const BEigensystem es = eigensystem(bm);
  for (int k = 1; k <= da; ++k) {
    cplx sum = 0.0;
    for (int j = d - da; j < d; ++j)
      sum += 2.0 / cplx{0.0, es.omega[j]} * es.vectors(2 * k - 1, j) * std::conj(es.vectors(0, j));
    alpha[k - 1] = (k % 2 == 0 ? 1.0 : -1.0) * sum.real();
  }
  return alpha;
}

// Stylized Lanczos profiles: b_0 = 1 and b_n for n = 1..d-1.
enum class BProfile { Linear, Sqrt, SU2 };

inline std::vector<double> stylized_profile(BProfile p, int d, double scale = 1.0) {
  require(d >= 1, ErrorKind::InvalidArgument, "profile dimension must be positive");
  std::vector<double> b(d);
  b[0] = 1.0;
  for (int n = 1; n < d; ++n) {
    switch (p) {
      case BProfile::Linear: b[n] = scale * n; break;
      case BProfile::Sqrt: b[n] = scale * std::sqrt(static_cast<double>(n)); break;
      case BProfile::SU2: b[n] = scale * std::sqrt(static_cast<double>(n) * (d - n)); break;
    }
  }
  return b;
}

}  // namespace kcd
