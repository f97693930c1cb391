#pragma once

#include <cmath>
#include <vector>

#include "kcd/core/types.hpp"

namespace kcd {

// The d x d matrix with zero diagonal and off-diagonals b_1..b_{d-1}.
struct TridiagonalT {
  std::vector<double> offdiag;  // b_1..b_{d-1}

  static TridiagonalT from_chain_coefficients(const std::vector<double>& b) {
    TridiagonalT t;
    if (b.size() > 1) t.offdiag.assign(b.begin() + 1, b.end());
    return t;
  }

  int dim() const noexcept { return static_cast<int>(offdiag.size()) + 1; }

  RealMatrix dense() const {
    const int d = dim();
    RealMatrix m = RealMatrix::Zero(d, d);
    for (int n = 1; n < d; ++n) m(n - 1, n) = m(n, n - 1) = offdiag[n - 1];
    return m;
  }
};

// Solves the symmetric tridiagonal system with diagonal `diag` and
// off-diagonal `off` (off[i] couples i and i+1) by LDL^T elimination, O(n).
// Throws SingularSystem if a pivot vanishes.
inline RealVector solve_symmetric_tridiagonal(const std::vector<double>& diag, const std::vector<double>& off,
                                              const RealVector& rhs) {
  const std::size_t n = diag.size();
  require(n == static_cast<std::size_t>(rhs.size()) && (n == 0 || off.size() + 1 == n),
          ErrorKind::LengthMismatch, "tridiagonal system shape");
  std::vector<double> d(n), l(n > 0 ? n - 1 : 0);
  double scale = 0.0;
  for (double v : diag) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = diag[i] - (i > 0 ? l[i - 1] * l[i - 1] * d[i - 1] : 0.0);
    require(std::abs(d[i]) > 1e-300 && std::abs(d[i]) > 1e-14 * scale, ErrorKind::SingularSystem,
            "zero pivot at row " + std::to_string(i));
    if (i + 1 < n) l[i] = off[i] / d[i];
  }
  RealVector y = rhs;
  for (std::size_t i = 1; i < n; ++i) y[i] -= l[i - 1] * y[i - 1];
  for (std::size_t i = 0; i < n; ++i) y[i] /= d[i];
  for (std::size_t i = n; i-- > 1;) y[i - 1] -= l[i - 1] * y[i];
  return y;
}

}  // namespace kcd
