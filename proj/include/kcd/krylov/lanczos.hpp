#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "kcd/core/operator.hpp"
#include "kcd/krylov/tridiagonal.hpp"

namespace kcd {

struct LanczosOptions {
  // Termination: stop once the residual norm falls to tol times the energy
  // scale of the Liouvillian (an upper bound on its spectral radius).
  double tol = 1e-9;
  // 0 means no cap besides the dimension of the operator space.
  int max_steps = 0;
  // Keep O_n in the result (required for assembling the CD operator).
  bool keep_basis = true;
};

// Lanczos output: b_0..b_{d-1} and orthonormal O_0..O_{d-1}.
struct KrylovChain {
  std::vector<double> b;
  std::vector<OperatorExpr> basis;
  bool truncated = false;       // stopped at max_steps, not at a vanishing residual
  bool near_threshold = false;  // terminating residual well above roundoff level
  double energy_scale = 0.0;
  double final_residual = 0.0;
  Measure measure = Measure::uniform();

  int d() const noexcept { return static_cast<int>(b.size()); }
  int d_A() const noexcept { return d() / 2; }
  double b0() const { return b.at(0); }
  TridiagonalT tridiagonal() const { return TridiagonalT::from_chain_coefficients(b); }
};

enum class Parity { Even, Odd };

inline Parity krylov_dimension_parity(const KrylovChain& chain) {
  return chain.d() % 2 == 0 ? Parity::Even : Parity::Odd;
}

inline const char* to_string(Parity p) { return p == Parity::Even ? "even" : "odd"; }

template <class Vec>
struct LanczosRun {
  std::vector<double> b;
  std::vector<Vec> basis;
  bool truncated = false;
  bool near_threshold = false;
  double energy_scale = 0.0;
  double final_residual = 0.0;
};

// Generic operator-space Lanczos with full reorthogonalization (modified
// Gram-Schmidt against every previous vector, applied twice).
//
// Space provides: Vec apply(const Vec&), cplx inner(const Vec&, const Vec&),
// void axpy(Vec& y, cplx a, const Vec& x), void scale(Vec&, double),
// double energy_scale(), and optionally void clean(Vec&).
template <class Space>
LanczosRun<typename Space::Vec> run_lanczos(const Space& space, typename Space::Vec start,
                                            const LanczosOptions& opt) {
  using Vec = typename Space::Vec;
  LanczosRun<Vec> run;
  const double b0sq = space.inner(start, start).real();
  require(std::isfinite(b0sq), ErrorKind::NumericalBreakdown, "non-finite derivative norm");
  require(b0sq > 0.0, ErrorKind::ZeroDerivative, "dH vanishes; the CD term is trivially zero");
  const double b0 = std::sqrt(b0sq);
  space.scale(start, 1.0 / b0);
  run.b.push_back(b0);
  run.energy_scale = space.energy_scale();
  const double threshold = opt.tol * run.energy_scale;

  std::vector<Vec> basis;
  basis.push_back(std::move(start));
  for (int n = 1;; ++n) {
    Vec r = space.apply(basis[n - 1]);
    if (n >= 2) space.axpy(r, -run.b[n - 1], basis[n - 2]);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : basis) {
        const cplx c = space.inner(q, r);
        if (c != cplx{0.0, 0.0}) space.axpy(r, -c, q);
      }
    if constexpr (requires { space.clean(r); }) space.clean(r);
    const double bn2 = space.inner(r, r).real();
    require(std::isfinite(bn2), ErrorKind::NumericalBreakdown, "non-finite Lanczos coefficient");
    require(bn2 >= 0.0, ErrorKind::NumericalBreakdown,
            "negative b_" + std::to_string(n) + "^2 = " + std::to_string(bn2));
    const double bn = std::sqrt(bn2);
    if (bn <= threshold || n >= space.dimension_bound()) {
      run.final_residual = bn;
      run.near_threshold = bn > 1e-3 * threshold;
      break;
    }
    if (opt.max_steps > 0 && n >= opt.max_steps) {
      run.final_residual = bn;
      run.truncated = true;
      break;
    }
    space.scale(r, 1.0 / bn);
    run.b.push_back(bn);
    basis.push_back(std::move(r));
  }
  if (opt.keep_basis) run.basis = std::move(basis);
  return run;
}

namespace detail {

struct PauliSpace {
  using Vec = PauliSum;
  const PauliSum& h;
  double weight;

  Vec apply(const Vec& v) const { return commutator(h, v); }
  cplx inner(const Vec& a, const Vec& b) const { return weight * normalized_overlap(a, b); }
  void axpy(Vec& y, cplx a, const Vec& x) const { y.axpy(a, x); }
  void scale(Vec& v, double s) const { v *= s; }
  void clean(Vec& v) const { v.prune(1e-14 * v.max_abs_coefficient()); }
  double energy_scale() const { return 2.0 * h.l1_norm(); }
  int dimension_bound() const {
    const int n = h.site_count();
    return n >= 15 ? std::numeric_limits<int>::max() : (1 << (2 * n));
  }
};

// Dense operators in the eigenbasis of H: L acts as (e_a - e_b) X_ab and the
// inner product weighs entry (a,b) by (w_a + w_b)/2.
struct DenseEigenSpace {
  using Vec = ComplexMatrix;
  RealMatrix gap;     // e_a - e_b
  RealMatrix weight;  // (w_a + w_b) / 2

  Vec apply(const Vec& v) const { return gap.cast<cplx>().cwiseProduct(v); }
  cplx inner(const Vec& a, const Vec& b) const {
    return (weight.cast<cplx>().cwiseProduct(a.conjugate().cwiseProduct(b))).sum();
  }
  void axpy(Vec& y, cplx a, const Vec& x) const { y += a * x; }
  void scale(Vec& v, double s) const { v *= s; }
  double energy_scale() const { return gap.cwiseAbs().maxCoeff() > 0 ? gap.cwiseAbs().maxCoeff() : 1.0; }
  int dimension_bound() const {
    const auto d = gap.rows();
    return static_cast<int>(d * d - d + 1);
  }
};

struct CoordinateSpace {
  using Vec = ComplexVector;
  const Eigen::SparseMatrix<cplx>& l;

  Vec apply(const Vec& v) const { return l * v; }
  cplx inner(const Vec& a, const Vec& b) const { return a.dot(b); }
  void axpy(Vec& y, cplx a, const Vec& x) const { y += a * x; }
  void scale(Vec& v, double s) const { v *= s; }
  double energy_scale() const {
    double m = 0.0;
    for (int k = 0; k < l.outerSize(); ++k) {
      double s = 0.0;
      for (Eigen::SparseMatrix<cplx>::InnerIterator it(l, k); it; ++it) s += std::abs(it.value());
      m = std::max(m, s);
    }
    return m > 0 ? m : 1.0;
  }
  int dimension_bound() const { return static_cast<int>(l.rows()); }
};

inline double sparse_l1_bound(const Eigen::SparseMatrix<double>& r) {
  RealVector rows = RealVector::Zero(r.rows()), cols = RealVector::Zero(r.cols());
  for (int k = 0; k < r.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(r, k); it; ++it) {
      rows[it.row()] += std::abs(it.value());
      cols[it.col()] += std::abs(it.value());
    }
  const double m = std::max(rows.size() ? rows.maxCoeff() : 0.0, cols.size() ? cols.maxCoeff() : 0.0);
  return m > 0 ? m : 1.0;
}

inline void reorthogonalize(RealVector& r, const std::vector<RealVector>& qs) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : qs) r -= q.dot(r) * q;
}

// Lanczos on L = [[0, iR], [-iR^T, 0]] with R real, starting from a real
// vector in the X block. Even vectors are (x, 0), odd vectors are (0, -i y),
// so the recursion runs on real vectors and each block is reorthogonalized
// only against itself.
inline KrylovChain bipartite_lanczos(const LiouvillianMatrix& l, const RealVector& x0, double b0,
                                     const LanczosOptions& opt) {
  const Eigen::SparseMatrix<double> r = l.block.imag();
  const Eigen::SparseMatrix<double> rt = r.transpose();
  KrylovChain chain;
  chain.b.push_back(b0);
  chain.energy_scale = sparse_l1_bound(r);
  const double threshold = opt.tol * chain.energy_scale;
  const int bound = static_cast<int>(r.rows() + r.cols());

  std::vector<RealVector> xs{x0}, ys;
  for (int n = 1;; ++n) {
    RealVector v;
    if (n % 2 == 1) {
      v = rt * xs.back();
      if (n >= 2) v -= chain.b[n - 1] * ys.back();
      reorthogonalize(v, ys);
    } else {
      v = r * ys.back();
      v -= chain.b[n - 1] * xs.back();  // x_{n-2}
      reorthogonalize(v, xs);
    }
    const double bn = v.norm();
    require(std::isfinite(bn), ErrorKind::NumericalBreakdown, "non-finite Lanczos coefficient");
    if (bn <= threshold || n >= bound) {
      chain.final_residual = bn;
      chain.near_threshold = bn > 1e-3 * threshold;
      break;
    }
    if (opt.max_steps > 0 && n >= opt.max_steps) {
      chain.final_residual = bn;
      chain.truncated = true;
      break;
    }
    v /= bn;
    chain.b.push_back(bn);
    (n % 2 == 1 ? ys : xs).push_back(std::move(v));
  }

  if (opt.keep_basis) {
    const auto dim = static_cast<Eigen::Index>(l.size());
    for (int n = 0; n < chain.d(); ++n) {
      ComplexVector c = ComplexVector::Zero(dim);
      if (n % 2 == 0) {
        const RealVector& x = xs[n / 2];
        for (std::size_t a = 0; a < l.even_index.size(); ++a) c[l.even_index[a]] = x[a];
      } else {
        const RealVector& y = ys[n / 2];
        for (std::size_t a = 0; a < l.odd_index.size(); ++a) c[l.odd_index[a]] = cplx{0.0, -y[a]};
      }
      chain.basis.push_back(make_structured(l, std::move(c)));
    }
  }
  return chain;
}

template <class Vec, class Convert>
KrylovChain to_chain(LanczosRun<Vec>&& run, Convert&& convert) {
  KrylovChain chain;
  chain.b = std::move(run.b);
  chain.truncated = run.truncated;
  chain.near_threshold = run.near_threshold;
  chain.energy_scale = run.energy_scale;
  chain.final_residual = run.final_residual;
  chain.basis.reserve(run.basis.size());
  for (auto& v : run.basis) chain.basis.push_back(convert(std::move(v)));
  return chain;
}

// Gaps that coincide in exact arithmetic (degenerate levels, equal level
// spacings) differ by roundoff after diagonalization. Left split, they act as
// distinct eigenvalues of L and the chain keeps resolving noise instead of
// terminating, so runs of gaps closer than tol * max|gap| are set to their mean.
inline void merge_equal_gaps(RealMatrix& gap, double tol = 1e-10) {
  const Eigen::Index n = gap.size();
  if (n == 0) return;
  const double eps = tol * std::max(gap.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  double* g = gap.data();
  std::sort(order.begin(), order.end(), [g](Eigen::Index a, Eigen::Index b) { return g[a] < g[b]; });
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i + 1;
    double sum = g[order[i]];
    while (j < n && g[order[j]] - g[order[j - 1]] <= eps) sum += g[order[j++]];
    const double mean = sum / static_cast<double>(j - i);
    for (Eigen::Index k = i; k < j; ++k) g[order[k]] = mean;
    i = j;
  }
}

inline void check_hermitian(const OperatorExpr& op, const char* what) {
  require(op.is_hermitian(1e-9), ErrorKind::InvalidArgument, std::string(what) + " must be Hermitian");
}

}  // namespace detail

// Lanczos recursion b_0 O_0 = dH, b_n O_n = L O_{n-1} - b_{n-1} O_{n-2}.
// Pauli sums under a uniform measure stay in the Pauli backend; Gibbs measures
// and dense inputs run in the eigenbasis of H.
inline KrylovChain build_krylov_chain(const OperatorExpr& h, const OperatorExpr& dh, const Measure& rho,
                                      const LanczosOptions& opt = {}) {
  require(!h.is_structured() && !dh.is_structured(), ErrorKind::BackendMismatch,
          "structured operators need build_chain_from_matrix");
  require(h.backend() == dh.backend(), ErrorKind::BackendMismatch,
          std::string(to_string(h.backend())) + " H with " + to_string(dh.backend()) + " dH");
  detail::check_hermitian(h, "H");
  detail::check_hermitian(dh, "dH");

  if (h.is_pauli() && rho.is_uniform()) {
    require(h.site_count() == dh.site_count(), ErrorKind::SiteCountMismatch, "H and dH site counts");
    detail::PauliSpace space{h.pauli(), rho.scale()};
    auto chain = detail::to_chain(run_lanczos(space, dh.pauli(), opt),
                                  [](PauliSum&& p) { return OperatorExpr(std::move(p)); });
    chain.measure = rho;
    return chain;
  }

  const OperatorExpr hd = to_dense(h), dd = to_dense(dh);
  require(hd.dense().rows() == dd.dense().rows(), ErrorKind::SiteCountMismatch, "H and dH dimensions");
  auto spec = std::make_shared<const Spectrum>(Spectrum::of(hd.dense()));
  const Measure bound = rho.bound_to(spec);
  const RealVector& e = spec->energies;
  const RealVector w = bound.weights(e);
  const auto d = e.size();
  detail::DenseEigenSpace space;
  space.gap.resize(d, d);
  space.weight.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index c = 0; c < d; ++c) {
      space.gap(a, c) = e[a] - e[c];
      space.weight(a, c) = 0.5 * (w[a] + w[c]);
    }
  detail::merge_equal_gaps(space.gap);
  const ComplexMatrix& u = spec->vectors;
  const int sites = hd.site_count();
  ComplexMatrix start = u.adjoint() * dd.dense() * u;
  // L is diagonal here, so entries that are zero in exact arithmetic stay
  // zero once cleared; roundoff left in them would otherwise seed directions
  // (other symmetry sectors) that the recursion amplifies step by step.
  const double floor = 1e-13 * start.cwiseAbs().maxCoeff();
  start = start.unaryExpr([floor](cplx z) { return std::abs(z) < floor ? cplx{0.0, 0.0} : z; });
  auto chain = detail::to_chain(run_lanczos(space, std::move(start), opt), [&](ComplexMatrix&& m) {
    return OperatorExpr(ComplexMatrix(u * m * u.adjoint()), sites);
  });
  chain.measure = bound;
  return chain;
}

// Lanczos on an L-matrix from a normalized start vector theta0; b0 is the norm
// of dH (the scale carried into the CD term). Uses the real bipartite
// recursion when L has a purely imaginary X/Y block and theta0 is a real
// X-sector vector.
inline KrylovChain build_chain_from_matrix(const LiouvillianMatrix& l, const ComplexVector& theta0,
                                           const LanczosOptions& opt = {}, double b0 = 1.0) {
  require(static_cast<std::size_t>(theta0.size()) == l.size(), ErrorKind::LengthMismatch,
          "theta0 length does not match L");
  require(std::abs(theta0.norm() - 1.0) <= 1e-10, ErrorKind::NotNormalized,
          "theta0 norm is " + std::to_string(theta0.norm()));
  require(b0 > 0.0, ErrorKind::ZeroDerivative, "b0 must be positive");

  if (l.has_block()) {
    const double re = ComplexMatrix(l.block).real().cwiseAbs().maxCoeff();
    const double im = ComplexMatrix(l.block).imag().cwiseAbs().maxCoeff();
    double off_sector = 0.0, imag_part = 0.0;
    for (int i : l.odd_index) off_sector = std::max(off_sector, std::abs(theta0[i]));
    for (int i : l.even_index) imag_part = std::max(imag_part, std::abs(theta0[i].imag()));
    if (re <= 1e-14 * std::max(im, 1.0) && off_sector == 0.0 && imag_part == 0.0) {
      RealVector x0(l.even_index.size());
      for (std::size_t a = 0; a < l.even_index.size(); ++a) x0[a] = theta0[l.even_index[a]].real();
      return detail::bipartite_lanczos(l, x0, b0, opt);
    }
  }

  detail::CoordinateSpace space{l.entries};
  ComplexVector start = b0 * theta0;
  return detail::to_chain(run_lanczos(space, std::move(start), opt),
                          [&](ComplexVector&& c) { return make_structured(l, std::move(c)); });
}

// Same recursion on the generic complex path, bypassing the bipartite
// shortcut. Used to cross-check the two implementations.
inline KrylovChain build_chain_from_matrix_generic(const LiouvillianMatrix& l, const ComplexVector& theta0,
                                                   const LanczosOptions& opt = {}, double b0 = 1.0) {
  require(std::abs(theta0.norm() - 1.0) <= 1e-10, ErrorKind::NotNormalized, "theta0 not normalized");
  detail::CoordinateSpace space{l.entries};
  ComplexVector start = b0 * theta0;
  return detail::to_chain(run_lanczos(space, std::move(start), opt),
                          [&](ComplexVector&& c) { return make_structured(l, std::move(c)); });
}

// Max-norm deviation of the chain Gram matrix from the identity.
inline double chain_orthonormality_error(const KrylovChain& chain) {
  const ComplexMatrix g = gram_matrix(chain.basis, chain.measure);
  return (g - ComplexMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

}  // namespace kcd
