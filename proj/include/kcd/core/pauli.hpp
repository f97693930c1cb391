#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kcd/core/types.hpp"

namespace kcd {

// A tensor product of single-site Pauli matrices on up to 64 sites, times a
// phase i^phase. Site n (1-based in physics notation) is bit n-1 of the masks.
// Letter encoding: I=(x0,z0), X=(x1,z0), Y=(x1,z1), Z=(x0,z1).
class PauliString {
 public:
  PauliString() = default;
  PauliString(int site_count, std::uint64_t x, std::uint64_t z, int phase = 0)
      : n_(site_count), x_(x), z_(z), phase_(((phase % 4) + 4) % 4) {
    require(site_count >= 1 && site_count <= 64, ErrorKind::InvalidArgument,
            "PauliString supports 1..64 sites");
    const std::uint64_t m = mask();
    require((x & ~m) == 0 && (z & ~m) == 0, ErrorKind::InvalidArgument,
            "Pauli mask exceeds site count");
  }

  static PauliString identity(int site_count) { return {site_count, 0, 0}; }

  // Parses e.g. "XIZY" (site 1 first). A leading "-", "i" or "-i" sets the phase.
  static PauliString parse(std::string_view text) {
    int phase = 0;
    if (text.starts_with("-i")) {
      phase = 3;
      text.remove_prefix(2);
    } else if (text.starts_with("-")) {
      phase = 2;
      text.remove_prefix(1);
    } else if (text.starts_with("i")) {
      phase = 1;
      text.remove_prefix(1);
    }
    const int n = static_cast<int>(text.size());
    std::uint64_t x = 0, z = 0;
    for (int k = 0; k < n; ++k) {
      const std::uint64_t bit = std::uint64_t{1} << k;
      switch (text[k]) {
        case 'I': break;
        case 'X': x |= bit; break;
        case 'Y': x |= bit; z |= bit; break;
        case 'Z': z |= bit; break;
        default:
          throw Error(ErrorKind::InvalidArgument, "bad Pauli letter in '" + std::string(text) + "'");
      }
    }
    return {n, x, z, phase};
  }

  // Single-site operator: letter in {I,X,Y,Z}, site is 1-based.
  static PauliString single(int site_count, char letter, int site) {
    std::string s(site_count, 'I');
    require(site >= 1 && site <= site_count, ErrorKind::InvalidArgument, "site out of range");
    s[site - 1] = letter;
    return parse(s);
  }

  int site_count() const noexcept { return n_; }
  std::uint64_t x_mask() const noexcept { return x_; }
  std::uint64_t z_mask() const noexcept { return z_; }
  int phase() const noexcept { return phase_; }
  cplx phase_value() const noexcept { return phase_of(phase_); }

  char letter(int site) const {
    const std::uint64_t bit = std::uint64_t{1} << (site - 1);
    const bool bx = x_ & bit, bz = z_ & bit;
    return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
  }

  std::string letters() const {
    std::string s(n_, 'I');
    for (int k = 1; k <= n_; ++k) s[k - 1] = letter(k);
    return s;
  }

  bool is_identity() const noexcept { return (x_ | z_) == 0; }

  // Number of sites from the first to the last non-identity letter, inclusive.
  int support_length() const noexcept {
    const std::uint64_t s = x_ | z_;
    if (s == 0) return 0;
    return 64 - std::countl_zero(s) - std::countr_zero(s);
  }

  int weight() const noexcept { return std::popcount(x_ | z_); }

  // Tr over the 2^n Hilbert space divided by 2^n.
  cplx normalized_trace() const noexcept { return is_identity() ? phase_value() : cplx{0.0, 0.0}; }

  friend bool operator==(const PauliString& a, const PauliString& b) noexcept {
    return a.n_ == b.n_ && a.x_ == b.x_ && a.z_ == b.z_ && a.phase_ == b.phase_;
  }

  static cplx phase_of(int p) noexcept {
    switch (((p % 4) + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }

  // Exponent e with sigma(xa,za) sigma(xb,zb) = i^e sigma(xa^xb, za^zb), for
  // phase-free strings.
  static int product_exponent(std::uint64_t xa, std::uint64_t za, std::uint64_t xb,
                              std::uint64_t zb) noexcept {
    const std::uint64_t Xa = xa & ~za, Ya = xa & za, Za = ~xa & za;
    const std::uint64_t Xb = xb & ~zb, Yb = xb & zb, Zb = ~xb & zb;
    const int plus = std::popcount(Xa & Yb) + std::popcount(Ya & Zb) + std::popcount(Za & Xb);
    const int minus = std::popcount(Ya & Xb) + std::popcount(Za & Yb) + std::popcount(Xa & Zb);
    return ((plus - minus) % 4 + 4) % 4;
  }

  // True iff the two strings anticommute.
  static bool anticommute(std::uint64_t xa, std::uint64_t za, std::uint64_t xb,
                          std::uint64_t zb) noexcept {
    return (std::popcount((xa & zb) ^ (za & xb)) & 1) != 0;
  }

  friend PauliString operator*(const PauliString& a, const PauliString& b) {
    require(a.n_ == b.n_, ErrorKind::SiteCountMismatch, "Pauli product of different sizes");
    const int e = product_exponent(a.x_, a.z_, b.x_, b.z_);
    return {a.n_, a.x_ ^ b.x_, a.z_ ^ b.z_, a.phase_ + b.phase_ + e};
  }

 private:
  std::uint64_t mask() const noexcept {
    return n_ == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n_) - 1);
  }

  int n_ = 1;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
  int phase_ = 0;
};

// Linear combination of phase-free Pauli strings with complex coefficients.
// Terms are kept sorted by (x, z) so that iteration order is deterministic.
class PauliSum {
 public:
  struct Term {
    std::uint64_t x;
    std::uint64_t z;
    cplx c;
  };

  PauliSum() = default;
  explicit PauliSum(int site_count) : n_(site_count) {
    require(site_count >= 1 && site_count <= 64, ErrorKind::InvalidArgument,
            "PauliSum supports 1..64 sites");
  }

  PauliSum(const PauliString& p, cplx c = 1.0) : PauliSum(p.site_count()) {
    add(p, c);
  }

  int site_count() const noexcept { return n_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  // Adds c * p, folding the phase of p into the coefficient.
  PauliSum& add(const PauliString& p, cplx c = 1.0) {
    require(p.site_count() == n_, ErrorKind::SiteCountMismatch, "PauliSum::add site count");
    add_raw(p.x_mask(), p.z_mask(), c * p.phase_value());
    return *this;
  }

  PauliSum& add(std::string_view letters, cplx c = 1.0) { return add(PauliString::parse(letters), c); }

  cplx coefficient(const PauliString& p) const {
    auto it = find(p.x_mask(), p.z_mask());
    if (it == terms_.end()) return {0.0, 0.0};
    return it->c * std::conj(p.phase_value());
  }

  PauliSum& operator+=(const PauliSum& o) {
    check_same(o);
    std::vector<Term> out;
    out.reserve(terms_.size() + o.terms_.size());
    auto a = terms_.cbegin(), b = o.terms_.cbegin();
    while (a != terms_.end() || b != o.terms_.end()) {
      if (b == o.terms_.end() || (a != terms_.end() && less(*a, *b))) {
        out.push_back(*a++);
      } else if (a == terms_.end() || less(*b, *a)) {
        out.push_back(*b++);
      } else {
        const cplx c = a->c + b->c;
        if (c != cplx{0.0, 0.0}) out.push_back({a->x, a->z, c});
        ++a;
        ++b;
      }
    }
    terms_ = std::move(out);
    return *this;
  }

  PauliSum& operator*=(cplx s) {
    if (s == cplx{0.0, 0.0}) {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_) t.c *= s;
    return *this;
  }

  // y += a * x
  PauliSum& axpy(cplx a, const PauliSum& x) {
    PauliSum tmp = x;
    tmp *= a;
    return *this += tmp;
  }

  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum& b) { return a.axpy(-1.0, b); }
  friend PauliSum operator*(cplx s, PauliSum a) { return a *= s; }

  PauliSum adjoint() const {
    PauliSum r = *this;
    for (auto& t : r.terms_) t.c = std::conj(t.c);
    return r;
  }

  // Product of two sums (operator multiplication).
  friend PauliSum operator*(const PauliSum& a, const PauliSum& b) {
    a.check_same(b);
    Accumulator acc;
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_) {
        const int e = PauliString::product_exponent(ta.x, ta.z, tb.x, tb.z);
        acc[{ta.x ^ tb.x, ta.z ^ tb.z}] += ta.c * tb.c * PauliString::phase_of(e);
      }
    return from_accumulator(a.n_, acc);
  }

  // [a, b] using that commuting strings drop out and anticommuting ones give 2ab.
  friend PauliSum commutator(const PauliSum& a, const PauliSum& b) {
    a.check_same(b);
    Accumulator acc;
    acc.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_) {
        if (!PauliString::anticommute(ta.x, ta.z, tb.x, tb.z)) continue;
        const int e = PauliString::product_exponent(ta.x, ta.z, tb.x, tb.z);
        acc[{ta.x ^ tb.x, ta.z ^ tb.z}] += 2.0 * ta.c * tb.c * PauliString::phase_of(e);
      }
    return from_accumulator(a.n_, acc);
  }

  // Tr[a^dagger b] / 2^n.
  friend cplx normalized_overlap(const PauliSum& a, const PauliSum& b) {
    a.check_same(b);
    cplx s = 0.0;
    auto ia = a.terms_.begin(), ib = b.terms_.begin();
    while (ia != a.terms_.end() && ib != b.terms_.end()) {
      if (less(*ia, *ib)) {
        ++ia;
      } else if (less(*ib, *ia)) {
        ++ib;
      } else {
        s += std::conj(ia->c) * ib->c;
        ++ia;
        ++ib;
      }
    }
    return s;
  }

  // Tr[.] / 2^n.
  cplx normalized_trace() const {
    auto it = find(0, 0);
    return it == terms_.end() ? cplx{0.0, 0.0} : it->c;
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, std::abs(t.c));
    return m;
  }

  double l1_norm() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.c);
    return s;
  }

  // Drops terms with |c| <= cutoff.
  PauliSum& prune(double cutoff) {
    std::erase_if(terms_, [cutoff](const Term& t) { return std::abs(t.c) <= cutoff; });
    return *this;
  }

  // Hermitian iff every coefficient is real (strings are Hermitian).
  bool is_hermitian(double tol = 1e-12) const {
    const double s = std::max(1.0, max_abs_coefficient());
    return std::ranges::all_of(terms_, [&](const Term& t) { return std::abs(t.c.imag()) <= tol * s; });
  }
  bool is_antihermitian(double tol = 1e-12) const {
    const double s = std::max(1.0, max_abs_coefficient());
    return std::ranges::all_of(terms_, [&](const Term& t) { return std::abs(t.c.real()) <= tol * s; });
  }

  ComplexMatrix to_dense() const;

  std::string to_string() const {
    std::string out;
    for (const auto& t : terms_) {
      if (!out.empty()) out += " + ";
      out += "(" + std::to_string(t.c.real()) + (t.c.imag() < 0 ? "" : "+") +
             std::to_string(t.c.imag()) + "i)" + PauliString(n_, t.x, t.z).letters();
    }
    return out.empty() ? "0" : out;
  }

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.first * 0x9E3779B97F4A7C15ULL ^ (k.second + 0x632BE59BD9B4E019ULL));
    }
  };
  using Accumulator = std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, cplx, KeyHash>;

  static bool less(const Term& a, const Term& b) noexcept {
    return a.x != b.x ? a.x < b.x : a.z < b.z;
  }

  static PauliSum from_accumulator(int n, const Accumulator& acc) {
    PauliSum r(n);
    r.terms_.reserve(acc.size());
    for (const auto& [k, c] : acc)
      if (c != cplx{0.0, 0.0}) r.terms_.push_back({k.first, k.second, c});
    std::ranges::sort(r.terms_, less);
    return r;
  }

  std::vector<Term>::const_iterator find(std::uint64_t x, std::uint64_t z) const {
    const Term key{x, z, {}};
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key, less);
    if (it != terms_.end() && it->x == x && it->z == z) return it;
    return terms_.end();
  }

  void add_raw(std::uint64_t x, std::uint64_t z, cplx c) {
    const Term key{x, z, c};
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key, less);
    if (it != terms_.end() && it->x == x && it->z == z) {
      it->c += c;
      if (it->c == cplx{0.0, 0.0}) terms_.erase(it);
    } else if (c != cplx{0.0, 0.0}) {
      terms_.insert(it, key);
    }
  }

  void check_same(const PauliSum& o) const {
    require(n_ == o.n_, ErrorKind::SiteCountMismatch,
            "Pauli sums on " + std::to_string(n_) + " and " + std::to_string(o.n_) + " sites");
  }

  int n_ = 1;
  std::vector<Term> terms_;
};

// Dense 2^n x 2^n matrix of a Pauli sum. Basis index bit (n-k) holds site k,
// so a string maps to the Kronecker product (site 1) x (site 2) x ... x (site n).
inline void accumulate_dense_pauli(ComplexMatrix& m, int n, std::uint64_t x, std::uint64_t z, cplx c) {
  const std::size_t dim = std::size_t{1} << n;
  std::uint64_t xr = 0, zr = 0;
  for (int k = 0; k < n; ++k) {
    if (x >> k & 1) xr |= std::uint64_t{1} << (n - 1 - k);
    if (z >> k & 1) zr |= std::uint64_t{1} << (n - 1 - k);
  }
  // Y = i X Z, so sigma(x,z)|col> = i^{#Y} (-1)^{popcount(z & col)} |col ^ x>.
  const cplx base = c * PauliString::phase_of(std::popcount(x & z));
  for (std::size_t col = 0; col < dim; ++col) {
    const bool odd = std::popcount(zr & col) & 1;
    m(col ^ xr, col) += odd ? -base : base;
  }
}

inline ComplexMatrix PauliSum::to_dense() const {
  const std::size_t dim = std::size_t{1} << n_;
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (const auto& t : terms_) accumulate_dense_pauli(m, n_, t.x, t.z, t.c);
  return m;
}

}  // namespace kcd
