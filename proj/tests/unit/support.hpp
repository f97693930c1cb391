#pragma once

#include <random>

#include "kcd/core/operator.hpp"

namespace kcd::test {

inline double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline ComplexMatrix random_hermitian(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  ComplexMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = cplx{nd(rng), nd(rng)};
  return 0.5 * (a + a.adjoint());
}

// Sum of `terms` random Pauli strings with real coefficients (Hermitian when
// `hermitian`, otherwise complex coefficients).
inline PauliSum random_pauli_sum(int n, int terms, std::mt19937_64& rng, bool hermitian = false) {
  std::normal_distribution<double> nd;
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  PauliSum s(n);
  for (int t = 0; t < terms; ++t) {
    const PauliString p(n, rng() & mask, rng() & mask);
    s.add(p, hermitian ? cplx{nd(rng), 0.0} : cplx{nd(rng), nd(rng)});
  }
  return s;
}

inline ComplexVector random_unit_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  ComplexVector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = cplx{nd(rng), nd(rng)};
  return v / v.norm();
}

}  // namespace kcd::test
