#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "kcd/models/model.hpp"
#include "kcd/models/spin_chain.hpp"

namespace kcd {

// XX chain with open boundaries:
// H = 1/2 sum_{n<n_s} v_n (X_n X_{n+1} + Y_n Y_{n+1}) + 1/2 sum_n h_n Z_n,
// rho = 1/2^{n_s}. Vectors are 0-based: v[n-1] = v_n, h[n-1] = h_n.
struct XxFields {
  std::vector<double> v;  // n_s - 1 couplings
  std::vector<double> h;  // n_s fields

  int sites() const noexcept { return static_cast<int>(h.size()); }
};

inline void check_fields(const XxFields& f) {
  require(f.sites() >= 2, ErrorKind::InvalidArgument, "XX chain needs at least two sites");
  require(static_cast<int>(f.v.size()) == f.sites() - 1, ErrorKind::LengthMismatch,
          "XX chain needs n_s - 1 couplings");
}

namespace xx_ops {

// V_n^k = (X Z..Z X + Y Z..Z Y)/sqrt2 on sites n..n+k.
inline PauliSum v(int n_s, int n, int k) {
  PauliSum s(n_s);
  const double c = 1.0 / std::sqrt(2.0);
  s.add(chain::jw_string(n_s, n, k, 'X', 'X'), c);
  s.add(chain::jw_string(n_s, n, k, 'Y', 'Y'), c);
  return s;
}

// W_n^k = (X Z..Z Y - Y Z..Z X)/sqrt2.
inline PauliSum w(int n_s, int n, int k) {
  PauliSum s(n_s);
  const double c = 1.0 / std::sqrt(2.0);
  s.add(chain::jw_string(n_s, n, k, 'X', 'Y'), c);
  s.add(chain::jw_string(n_s, n, k, 'Y', 'X'), -c);
  return s;
}

inline PauliSum z(int n_s, int n) { return PauliSum(PauliString::single(n_s, 'Z', n)); }

}  // namespace xx_ops

inline PauliSum xx_hamiltonian(const XxFields& f) {
  check_fields(f);
  const int n_s = f.sites();
  PauliSum s(n_s);
  for (int n = 1; n < n_s; ++n) s.axpy(f.v[n - 1] / std::sqrt(2.0), xx_ops::v(n_s, n, 1));
  for (int n = 1; n <= n_s; ++n) s.axpy(0.5 * f.h[n - 1], xx_ops::z(n_s, n));
  return s;
}

inline std::string xx_key(char kind, int n) { return std::string(1, kind) + std::to_string(n); }

inline XxFields xx_fields_from(const Params& p, int n_s, bool derivative = false) {
  XxFields f;
  for (int n = 1; n < n_s; ++n) f.v.push_back(derivative ? param_or(p, xx_key('v', n), 0.0) : param(p, xx_key('v', n)));
  for (int n = 1; n <= n_s; ++n) f.h.push_back(derivative ? param_or(p, xx_key('h', n), 0.0) : param(p, xx_key('h', n)));
  return f;
}

inline Params xx_params(const XxFields& f) {
  Params p;
  for (int n = 1; n < f.sites(); ++n) p[xx_key('v', n)] = f.v[n - 1];
  for (int n = 1; n <= f.sites(); ++n) p[xx_key('h', n)] = f.h[n - 1];
  return p;
}

// Parameters v1..v{n-1}, h1..hn.
inline ModelSpec xx_spec(int n_s) {
  require(n_s >= 2 && n_s <= 64, ErrorKind::InvalidArgument, "Pauli XX model supports 2..64 sites");
  ModelSpec m;
  m.name = "xx";
  m.backend = Backend::PauliSum;
  m.site_count = n_s;
  m.h = [n_s](const Params& p) { return OperatorExpr(xx_hamiltonian(xx_fields_from(p, n_s))); };
  m.dh = [n_s](const Params&, const Params& pd) {
    return OperatorExpr(xx_hamiltonian(xx_fields_from(pd, n_s, true)));
  };
  return m;
}

// Index layout of the structured basis X = ({Z_n}, {V_n^k}), Y = ({W_n^k}),
// pairs (n, k) ordered by n then k.
class XxLayout {
 public:
  explicit XxLayout(int n_s, bool with_elements = false) : n_s_(n_s) {
    require(n_s >= 2, ErrorKind::InvalidArgument, "XX chain needs at least two sites");
    offset_.assign(n_s + 1, 0);
    for (int n = 1; n < n_s; ++n) offset_[n + 1] = offset_[n] + (n_s - n);
    const int p = pairs();
    std::vector<Sector> sectors(n_s + p, Sector::Even);
    sectors.insert(sectors.end(), p, Sector::Odd);
    std::vector<int> body;
    std::vector<std::string> labels;
    for (int n = 1; n <= n_s; ++n) {
      body.push_back(1);
      labels.push_back("Z" + std::to_string(n));
    }
    for (int pass = 0; pass < 2; ++pass)
      for (int n = 1; n < n_s; ++n)
        for (int k = 1; n + k <= n_s; ++k) {
          body.push_back(k + 1);
          labels.push_back((pass == 0 ? "V" : "W") + std::to_string(n) + "_" + std::to_string(k));
        }
    BasisDeclaration decl;
    if (with_elements) {
      require(n_s <= 16, ErrorKind::CapExceeded, "explicit XX basis elements limited to 16 sites");
      std::vector<OperatorExpr> els;
      for (int n = 1; n <= n_s; ++n) els.emplace_back(xx_ops::z(n_s, n));
      for (int pass = 0; pass < 2; ++pass)
        for (int n = 1; n < n_s; ++n)
          for (int k = 1; n + k <= n_s; ++k)
            els.emplace_back(pass == 0 ? xx_ops::v(n_s, n, k) : xx_ops::w(n_s, n, k));
      decl = BasisDeclaration::of(std::move(els), sectors);
    } else {
      decl = BasisDeclaration::abstract(sectors.size(), sectors);
    }
    decl.with_body_counts(std::move(body)).with_labels(std::move(labels));
    basis_ = std::make_shared<const BasisDeclaration>(std::move(decl));
  }

  int sites() const noexcept { return n_s_; }
  int pairs() const noexcept { return n_s_ * (n_s_ - 1) / 2; }
  int x_size() const noexcept { return n_s_ + pairs(); }
  int y_size() const noexcept { return pairs(); }
  int size() const noexcept { return x_size() + y_size(); }

  // Valid pair: n >= 1, k >= 1, n + k <= n_s.
  bool valid(int n, int k) const noexcept { return n >= 1 && k >= 1 && n + k <= n_s_; }
  int pair(int n, int k) const { return offset_[n] + (k - 1); }

  int z_row(int n) const { return n - 1; }
  int v_row(int n, int k) const { return n_s_ + pair(n, k); }
  int w_col(int n, int k) const { return pair(n, k); }
  // Positions in the full (X; Y) vector.
  int w_index(int n, int k) const { return x_size() + pair(n, k); }

  const std::shared_ptr<const BasisDeclaration>& basis() const noexcept { return basis_; }

 private:
  int n_s_;
  std::vector<int> offset_;
  std::shared_ptr<const BasisDeclaration> basis_;
};

// M_{mu nu} = (X_mu, L W_nu) from
// L W_n^k = -i(h_{n+k} - h_n) V_n^k - i v_{n-1} V_{n-1}^{k+1} - i v_n V_{n+1}^{k-1}
//           + i v_{n+k-1} V_n^{k-1} + i v_{n+k} V_n^{k+1}
//           + delta_{k1} sqrt2 i v_n (Z_{n+1} - Z_n),
// with out-of-range couplings and V^0 dropped.
inline Eigen::SparseMatrix<cplx> xx_m_block(const XxLayout& lay, const XxFields& f) {
  check_fields(f);
  require(f.sites() == lay.sites(), ErrorKind::SiteCountMismatch, "fields do not match the layout");
  const int n_s = lay.sites();
  auto vv = [&](int n) { return (n >= 1 && n < n_s) ? f.v[n - 1] : 0.0; };
  auto hh = [&](int n) { return f.h[n - 1]; };
  const cplx i{0.0, 1.0};
  std::vector<Eigen::Triplet<cplx>> t;
  for (int n = 1; n < n_s; ++n)
    for (int k = 1; n + k <= n_s; ++k) {
      const int col = lay.w_col(n, k);
      auto put = [&](int nn, int kk, cplx c) {
        if (lay.valid(nn, kk) && c != cplx{0.0, 0.0}) t.emplace_back(lay.v_row(nn, kk), col, c);
      };
      put(n, k, -i * (hh(n + k) - hh(n)));
      put(n - 1, k + 1, -i * vv(n - 1));
      put(n + 1, k - 1, -i * vv(n));
      put(n, k - 1, i * vv(n + k - 1));
      put(n, k + 1, i * vv(n + k));
      if (k == 1 && vv(n) != 0.0) {
        t.emplace_back(lay.z_row(n + 1), col, std::sqrt(2.0) * i * vv(n));
        t.emplace_back(lay.z_row(n), col, -std::sqrt(2.0) * i * vv(n));
      }
    }
  Eigen::SparseMatrix<cplx> m(lay.x_size(), lay.y_size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

inline LiouvillianMatrix xx_liouvillian(const XxLayout& lay, const XxFields& f) {
  return LiouvillianMatrix::from_block(xx_m_block(lay, f), lay.basis());
}

// Coordinates of dH (fields given by the derivative): Z_n -> hdot_n/2,
// V_n^1 -> vdot_n/sqrt2. Returns the unnormalized vector; its norm is b_0.
inline ComplexVector xx_derivative_coordinates(const XxLayout& lay, const XxFields& df) {
  check_fields(df);
  ComplexVector c = ComplexVector::Zero(lay.size());
  for (int n = 1; n <= lay.sites(); ++n) c[lay.z_row(n)] = 0.5 * df.h[n - 1];
  for (int n = 1; n < lay.sites(); ++n) c[lay.v_row(n, 1)] = df.v[n - 1] / std::sqrt(2.0);
  return c;
}

// Single-excitation block (magnetization n_s - 2): tridiagonal with diagonal
// sum(h)/2 - h_n and hopping v_n.
inline RealMatrix xx_single_particle(const XxFields& f) {
  check_fields(f);
  const int n_s = f.sites();
  double sum = 0.0;
  for (double x : f.h) sum += x;
  RealMatrix m = RealMatrix::Zero(n_s, n_s);
  for (int n = 0; n < n_s; ++n) m(n, n) = 0.5 * sum - f.h[n];
  for (int n = 0; n + 1 < n_s; ++n) m(n, n + 1) = m(n + 1, n) = f.v[n];
  return m;
}

inline RealVector xx_single_particle_spectrum(const XxFields& f) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(xx_single_particle(f), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Uniform double in [0, 1) from the top 53 bits, independent of the standard
// library's distribution implementation.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// v_n = v0 r_n with r_n uniform on [-1, 1].
inline std::vector<double> xx_random_couplings(int n_s, double v0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n_s - 1);
  for (auto& x : v) x = v0 * (2.0 * unit_uniform(rng) - 1.0);
  return v;
}

// h_n(t) = h0 (1 + tanh f_n)/2 with f_n = n - 1 + x0 - (n_s - 1 + 2 x0) t/t_f;
// couplings constant.
struct XxAnnealing {
  std::vector<double> v;
  double h0 = 2.0;
  double x0 = 4.0;
  double t_f = 100.0;

  int sites() const noexcept { return static_cast<int>(v.size()) + 1; }

  XxFields fields(double t) const {
    const int n_s = sites();
    XxFields f{v, std::vector<double>(n_s)};
    for (int n = 1; n <= n_s; ++n) f.h[n - 1] = h0 * (1 + std::tanh(arg(n, t))) / 2;
    return f;
  }

  XxFields derivative(double t) const {
    const int n_s = sites();
    XxFields f{std::vector<double>(n_s - 1, 0.0), std::vector<double>(n_s)};
    const double rate = -(n_s - 1 + 2 * x0) / t_f;
    for (int n = 1; n <= n_s; ++n) {
      const double c = std::cosh(arg(n, t));
      f.h[n - 1] = h0 / 2 * rate / (c * c);
    }
    return f;
  }

  DrivingProtocol protocol() const {
    DrivingProtocol d;
    d.name = "xx_annealing";
    d.t_f = t_f;
    const XxAnnealing self = *this;
    d.lambda = [self](double t) { return xx_params(self.fields(t)); };
    d.lambda_dot = [self](double t) { return xx_params(self.derivative(t)); };
    return d;
  }

 private:
  double arg(int n, double t) const { return n - 1 + x0 - (sites() - 1 + 2 * x0) * t / t_f; }
};

}  // namespace kcd
