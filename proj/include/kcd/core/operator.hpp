#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "kcd/core/measure.hpp"
#include "kcd/core/pauli.hpp"
#include "kcd/core/types.hpp"

namespace kcd {

enum class Backend { PauliSum, Dense, Structured };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::PauliSum: return "pauli-sum";
    case Backend::Dense: return "dense";
    case Backend::Structured: return "structured";
  }
  return "?";
}

// Hilbert-space matrix. site_count is the number of qubits when the matrix
// acts on 2^n states, and 0 for systems that are not qubit registers.
struct DenseOperator {
  ComplexMatrix m;
  int site_count = 0;
};

class BasisDeclaration;

// Coordinates on a declared orthonormal list of basis operators.
struct StructuredOperator {
  std::shared_ptr<const BasisDeclaration> basis;
  ComplexVector coords;
};

inline std::size_t default_dense_cap() { return std::size_t{1} << 14; }

class OperatorExpr {
 public:
  OperatorExpr() : rep_(DenseOperator{}) {}
  OperatorExpr(PauliSum p) : rep_(std::move(p)) {}
  OperatorExpr(DenseOperator d) : rep_(std::move(d)) {}
  OperatorExpr(ComplexMatrix m, int site_count = 0) : rep_(DenseOperator{std::move(m), site_count}) {}
  OperatorExpr(StructuredOperator s);

  Backend backend() const noexcept { return static_cast<Backend>(rep_.index()); }
  bool is_pauli() const noexcept { return backend() == Backend::PauliSum; }
  bool is_dense() const noexcept { return backend() == Backend::Dense; }
  bool is_structured() const noexcept { return backend() == Backend::Structured; }

  const PauliSum& pauli() const { return get<PauliSum>("pauli-sum"); }
  PauliSum& pauli() { return get<PauliSum>("pauli-sum"); }
  const ComplexMatrix& dense() const { return get<DenseOperator>("dense").m; }
  ComplexMatrix& dense() { return get<DenseOperator>("dense").m; }
  const StructuredOperator& structured() const { return get<StructuredOperator>("structured"); }
  StructuredOperator& structured() { return get<StructuredOperator>("structured"); }

  // Qubit count (0 when not known for dense/structured operators).
  int site_count() const noexcept {
    if (auto* p = std::get_if<PauliSum>(&rep_)) return p->site_count();
    if (auto* d = std::get_if<DenseOperator>(&rep_)) return d->site_count;
    return 0;
  }

  OperatorExpr& operator*=(cplx s) {
    std::visit([s](auto& r) {
      using T = std::decay_t<decltype(r)>;
      if constexpr (std::is_same_v<T, PauliSum>) r *= s;
      else if constexpr (std::is_same_v<T, DenseOperator>) r.m *= s;
      else r.coords *= s;
    }, rep_);
    return *this;
  }

  // this += a * x
  OperatorExpr& axpy(cplx a, const OperatorExpr& x);

  OperatorExpr& operator+=(const OperatorExpr& x) { return axpy(1.0, x); }
  OperatorExpr& operator-=(const OperatorExpr& x) { return axpy(-1.0, x); }
  friend OperatorExpr operator+(OperatorExpr a, const OperatorExpr& b) { return a += b; }
  friend OperatorExpr operator-(OperatorExpr a, const OperatorExpr& b) { return a -= b; }
  friend OperatorExpr operator*(cplx s, OperatorExpr a) { return a *= s; }

  // Zero operator with the same backend and shape.
  OperatorExpr zero_like() const {
    OperatorExpr z = *this;
    z *= 0.0;
    return z;
  }

  bool is_hermitian(double tol = 1e-10) const;
  bool is_antihermitian(double tol = 1e-10) const;

 private:
  template <class T>
  const T& get(const char* name) const {
    if (auto* p = std::get_if<T>(&rep_)) return *p;
    throw Error(ErrorKind::BackendMismatch,
                std::string("expected ") + name + " operator, got " + to_string(backend()));
  }
  template <class T>
  T& get(const char* name) {
    if (auto* p = std::get_if<T>(&rep_)) return *p;
    throw Error(ErrorKind::BackendMismatch,
                std::string("expected ") + name + " operator, got " + to_string(backend()));
  }

  std::variant<PauliSum, DenseOperator, StructuredOperator> rep_;
};

enum class Sector { Even, Odd, Untagged };

// Orthonormal list of Hermitian basis operators with optional parity tags
// (Even = X-type, Odd = Y-type) and body-count labels. A declaration with no
// elements is an abstract coordinate basis of the given size.
class BasisDeclaration {
 public:
  BasisDeclaration() = default;

  static BasisDeclaration abstract(std::size_t size, std::vector<Sector> sectors = {}) {
    BasisDeclaration b;
    b.size_ = size;
    b.sectors_ = sectors.empty() ? std::vector<Sector>(size, Sector::Untagged) : std::move(sectors);
    require(b.sectors_.size() == size, ErrorKind::LengthMismatch, "sector tags");
    return b;
  }

  static BasisDeclaration of(std::vector<OperatorExpr> elements, std::vector<Sector> sectors = {}) {
    BasisDeclaration b;
    b.size_ = elements.size();
    require(b.size_ > 0, ErrorKind::InvalidArgument, "empty basis");
    for (const auto& e : elements)
      require(!e.is_structured(), ErrorKind::BackendMismatch, "basis elements must be concrete operators");
    b.elements_ = std::move(elements);
    b.sectors_ = sectors.empty() ? std::vector<Sector>(b.size_, Sector::Untagged) : std::move(sectors);
    require(b.sectors_.size() == b.size_, ErrorKind::LengthMismatch, "sector tags");
    return b;
  }

  std::size_t size() const noexcept { return size_; }
  bool has_elements() const noexcept { return !elements_.empty(); }
  const std::vector<OperatorExpr>& elements() const noexcept { return elements_; }
  const OperatorExpr& element(std::size_t i) const { return elements_.at(i); }
  const std::vector<Sector>& sectors() const noexcept { return sectors_; }
  bool is_parity_tagged() const noexcept {
    for (Sector s : sectors_)
      if (s == Sector::Untagged) return false;
    return true;
  }

  // Body counts per element (empty when not declared).
  const std::vector<int>& body_counts() const noexcept { return body_; }
  BasisDeclaration& with_body_counts(std::vector<int> body) {
    require(body.size() == size_, ErrorKind::LengthMismatch, "body counts");
    body_ = std::move(body);
    return *this;
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  BasisDeclaration& with_labels(std::vector<std::string> labels) {
    require(labels.size() == size_, ErrorKind::LengthMismatch, "labels");
    labels_ = std::move(labels);
    return *this;
  }

  // Sum_mu c_mu X_mu in the element backend.
  OperatorExpr expand(const ComplexVector& coords) const {
    require(has_elements(), ErrorKind::BackendMismatch, "abstract basis has no concrete elements");
    require(static_cast<std::size_t>(coords.size()) == size_, ErrorKind::LengthMismatch,
            "coordinate vector length");
    OperatorExpr out = elements_.front().zero_like();
    for (std::size_t i = 0; i < size_; ++i)
      if (coords[i] != cplx{0.0, 0.0}) out.axpy(coords[i], elements_[i]);
    return out;
  }

 private:
  std::size_t size_ = 0;
  std::vector<OperatorExpr> elements_;
  std::vector<Sector> sectors_;
  std::vector<int> body_;
  std::vector<std::string> labels_;
};

inline OperatorExpr::OperatorExpr(StructuredOperator s) : rep_(std::move(s)) {
  const auto& so = std::get<StructuredOperator>(rep_);
  require(static_cast<bool>(so.basis), ErrorKind::InvalidArgument,
          "structured operator without a basis declaration");
  require(static_cast<std::size_t>(so.coords.size()) == so.basis->size(), ErrorKind::LengthMismatch,
          "structured coordinates do not match the basis size");
}

inline OperatorExpr& OperatorExpr::axpy(cplx a, const OperatorExpr& x) {
  require(backend() == x.backend(), ErrorKind::BackendMismatch,
          std::string("cannot combine ") + to_string(backend()) + " and " + to_string(x.backend()));
  switch (backend()) {
    case Backend::PauliSum:
      pauli().axpy(a, x.pauli());
      break;
    case Backend::Dense: {
      auto& m = dense();
      if (m.size() == 0) {
        m = a * x.dense();
        std::get<DenseOperator>(rep_).site_count = x.site_count();
        break;
      }
      require(m.rows() == x.dense().rows(), ErrorKind::SiteCountMismatch, "dense dimensions differ");
      m += a * x.dense();
      break;
    }
    case Backend::Structured: {
      auto& s = structured();
      require(s.basis == x.structured().basis, ErrorKind::BackendMismatch,
              "structured operators over different bases");
      s.coords += a * x.structured().coords;
      break;
    }
  }
  return *this;
}

inline bool OperatorExpr::is_hermitian(double tol) const {
  switch (backend()) {
    case Backend::PauliSum: return pauli().is_hermitian(tol);
    case Backend::Dense: {
      const auto& m = dense();
      const double s = std::max(1.0, m.cwiseAbs().maxCoeff());
      return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * s;
    }
    case Backend::Structured: {
      // Basis elements are Hermitian, so Hermitian operators have real coordinates.
      const auto& c = structured().coords;
      const double s = std::max(1.0, c.cwiseAbs().maxCoeff());
      return c.imag().cwiseAbs().maxCoeff() <= tol * s;
    }
  }
  return false;
}

inline bool OperatorExpr::is_antihermitian(double tol) const {
  OperatorExpr t = *this;
  t *= cplx{0.0, 1.0};
  return t.is_hermitian(tol);
}

// Matrix form of an operator. Pauli sums are converted exactly; structured
// operators are expanded through their basis elements.
inline OperatorExpr to_dense(const OperatorExpr& op, std::size_t cap = default_dense_cap()) {
  switch (op.backend()) {
    case Backend::Dense: return op;
    case Backend::PauliSum: {
      const int n = op.site_count();
      require(n < 63 && (std::size_t{1} << n) <= cap, ErrorKind::CapExceeded,
              "2^" + std::to_string(n) + " exceeds the dense dimension cap");
      return OperatorExpr(op.pauli().to_dense(), n);
    }
    case Backend::Structured: {
      const auto& s = op.structured();
      return to_dense(s.basis->expand(s.coords), cap);
    }
  }
  return op;
}

namespace detail {

inline void check_same_space(const OperatorExpr& a, const OperatorExpr& b) {
  require(a.backend() == b.backend(), ErrorKind::BackendMismatch,
          std::string(to_string(a.backend())) + " vs " + to_string(b.backend()));
  if (a.is_pauli())
    require(a.site_count() == b.site_count(), ErrorKind::SiteCountMismatch,
            std::to_string(a.site_count()) + " vs " + std::to_string(b.site_count()) + " sites");
  if (a.is_dense())
    require(a.dense().rows() == b.dense().rows(), ErrorKind::SiteCountMismatch,
            "dense dimensions " + std::to_string(a.dense().rows()) + " vs " +
                std::to_string(b.dense().rows()));
}

}  // namespace detail

// [H, O].
inline OperatorExpr apply_liouvillian(const OperatorExpr& h, const OperatorExpr& o) {
  require(!h.is_structured(), ErrorKind::BackendMismatch,
          "a structured Hamiltonian has no commutator; use a LiouvillianMatrix");
  if (o.is_structured()) {
    const auto& s = o.structured();
    return apply_liouvillian(h, s.basis->expand(s.coords));
  }
  detail::check_same_space(h, o);
  if (h.is_pauli()) return OperatorExpr(commutator(h.pauli(), o.pauli()));
  const auto& H = h.dense();
  const auto& O = o.dense();
  return OperatorExpr(ComplexMatrix(H * O - O * H), h.site_count());
}

// (X, Y) = 1/2 Tr[rho (X^+ Y + Y X^+)].
inline cplx inner_product(const OperatorExpr& x, const OperatorExpr& y, const Measure& rho) {
  detail::check_same_space(x, y);
  switch (x.backend()) {
    case Backend::PauliSum:
      if (rho.is_uniform()) return rho.scale() * normalized_overlap(x.pauli(), y.pauli());
      return inner_product(to_dense(x), to_dense(y), rho);
    case Backend::Dense: {
      const auto& X = x.dense();
      const auto& Y = y.dense();
      const double d = static_cast<double>(X.rows());
      if (rho.is_uniform()) return rho.scale() / d * X.conjugate().cwiseProduct(Y).sum();
      const ComplexMatrix r = rho.density(X.rows());
      return 0.5 * ((r * X.adjoint() * Y).trace() + (r * Y * X.adjoint()).trace());
    }
    case Backend::Structured: {
      const auto& a = x.structured();
      const auto& b = y.structured();
      require(a.basis == b.basis, ErrorKind::BackendMismatch, "structured operators over different bases");
      return a.coords.dot(b.coords);
    }
  }
  return 0.0;
}

inline double operator_norm(const OperatorExpr& x, const Measure& rho) {
  return std::sqrt(std::max(0.0, inner_product(x, x, rho).real()));
}

// Matrix of the superoperator L on a basis, L_{mu nu} = (X_mu, [H, X_nu]).
// Stored sparse; for parity-tagged bases the off-diagonal block
// M_{mu nu} = (X_mu, L Y_nu) is kept separately with X listed before Y.
struct LiouvillianMatrix {
  Eigen::SparseMatrix<cplx> entries;
  std::shared_ptr<const BasisDeclaration> basis;
  std::vector<int> even_index;  // positions of X-type elements
  std::vector<int> odd_index;   // positions of Y-type elements
  Eigen::SparseMatrix<cplx> block;  // d_X x d_Y

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries.rows()); }
  bool has_block() const noexcept { return block.rows() > 0 && block.cols() > 0; }

  ComplexMatrix dense() const { return ComplexMatrix(entries); }

  // Builds the full matrix from a d_X x d_Y block with X elements first.
  static LiouvillianMatrix from_block(const Eigen::SparseMatrix<cplx>& m,
                                      std::shared_ptr<const BasisDeclaration> basis = nullptr) {
    LiouvillianMatrix out;
    const auto dx = m.rows(), dy = m.cols();
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(2 * m.nonZeros());
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<cplx>::InnerIterator it(m, k); it; ++it) {
        trip.emplace_back(it.row(), dx + it.col(), it.value());
        trip.emplace_back(dx + it.col(), it.row(), std::conj(it.value()));
      }
    out.entries.resize(dx + dy, dx + dy);
    out.entries.setFromTriplets(trip.begin(), trip.end());
    out.block = m;
    for (int i = 0; i < dx; ++i) out.even_index.push_back(i);
    for (int j = 0; j < dy; ++j) out.odd_index.push_back(static_cast<int>(dx) + j);
    if (!basis) {
      std::vector<Sector> s(dx, Sector::Even);
      s.insert(s.end(), dy, Sector::Odd);
      basis = std::make_shared<const BasisDeclaration>(BasisDeclaration::abstract(dx + dy, s));
    }
    require(basis->size() == static_cast<std::size_t>(dx + dy), ErrorKind::LengthMismatch,
            "basis size does not match the block");
    out.basis = std::move(basis);
    return out;
  }

  static LiouvillianMatrix from_dense(const ComplexMatrix& l,
                                      std::shared_ptr<const BasisDeclaration> basis = nullptr) {
    require(l.rows() == l.cols(), ErrorKind::InvalidArgument, "L must be square");
    LiouvillianMatrix out;
    out.entries = l.sparseView(0.0, 0.0);
    out.entries.makeCompressed();
    if (!basis) basis = std::make_shared<const BasisDeclaration>(BasisDeclaration::abstract(l.rows()));
    require(basis->size() == static_cast<std::size_t>(l.rows()), ErrorKind::LengthMismatch,
            "basis size does not match L");
    if (basis->is_parity_tagged()) {
      for (std::size_t i = 0; i < basis->size(); ++i)
        (basis->sectors()[i] == Sector::Even ? out.even_index : out.odd_index).push_back(static_cast<int>(i));
      ComplexMatrix m(out.even_index.size(), out.odd_index.size());
      for (std::size_t a = 0; a < out.even_index.size(); ++a)
        for (std::size_t b = 0; b < out.odd_index.size(); ++b)
          m(a, b) = l(out.even_index[a], out.odd_index[b]);
      out.block = m.sparseView(0.0, 0.0);
    }
    out.basis = std::move(basis);
    return out;
  }
};

// Gram matrix G_{mu nu} = (X_mu, X_nu).
inline ComplexMatrix gram_matrix(const std::vector<OperatorExpr>& ops, const Measure& rho) {
  const auto n = ops.size();
  ComplexMatrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      g(i, j) = inner_product(ops[i], ops[j], rho);
      g(j, i) = std::conj(g(i, j));
    }
  return g;
}

namespace detail {

inline Measure bind(const Measure& rho, const OperatorExpr& h) {
  if (rho.is_uniform() || rho.is_bound()) return rho;
  return rho.bound_to(to_dense(h).dense());
}

}  // namespace detail

// L-matrix of H on an orthonormal basis (orthonormality checked to 1e-10).
inline LiouvillianMatrix build_liouvillian_matrix(const OperatorExpr& h,
                                                  std::shared_ptr<const BasisDeclaration> basis,
                                                  const Measure& rho, double ortho_tol = 1e-10) {
  require(basis && basis->has_elements(), ErrorKind::InvalidArgument,
          "L-matrix needs a basis with concrete elements");
  const Measure r = detail::bind(rho, h);
  const auto& els = basis->elements();
  const ComplexMatrix g = gram_matrix(els, r);
  const double dev = (g - ComplexMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  require(dev <= ortho_tol, ErrorKind::NonOrthonormalBasis,
          "basis Gram matrix deviates from identity by " + std::to_string(dev));

  const auto n = static_cast<Eigen::Index>(els.size());
  ComplexMatrix l = ComplexMatrix::Zero(n, n);
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    const OperatorExpr lx = apply_liouvillian(h, els[nu]);
    for (Eigen::Index mu = 0; mu < n; ++mu) l(mu, nu) = inner_product(els[mu], lx, r);
  }
  // Enforce the exact structure: purely imaginary, antisymmetric, zero diagonal.
  ComplexMatrix lc = cplx{0.0, 1.0} * (0.5 * (l - l.transpose())).imag().cast<cplx>();
  lc.diagonal().setZero();
  if (basis->is_parity_tagged()) {
    const auto& s = basis->sectors();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (s[i] == s[j]) lc(i, j) = 0.0;
  }
  return LiouvillianMatrix::from_dense(lc, std::move(basis));
}

// Structured operator over the basis of L.
inline OperatorExpr make_structured(const LiouvillianMatrix& l, ComplexVector coords) {
  return OperatorExpr(StructuredOperator{l.basis, std::move(coords)});
}

// [H, O] in coordinates.
inline OperatorExpr apply_liouvillian(const LiouvillianMatrix& l, const OperatorExpr& o) {
  const auto& s = o.structured();
  require(s.basis == l.basis, ErrorKind::BackendMismatch, "operator not over the L-matrix basis");
  return make_structured(l, l.entries * s.coords);
}

// Coordinates (X_mu, O) of an operator on a concrete basis.
inline ComplexVector coordinates(const BasisDeclaration& basis, const OperatorExpr& o, const Measure& rho) {
  require(basis.has_elements(), ErrorKind::InvalidArgument, "basis has no concrete elements");
  ComplexVector c(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) c[i] = inner_product(basis.element(i), o, rho);
  return c;
}

}  // namespace kcd
