#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "kcd/core/types.hpp"

namespace kcd {

// Eigen-decomposition of a dense Hermitian matrix, ascending energies.
struct Spectrum {
  RealVector energies;
  ComplexMatrix vectors;  // columns are eigenvectors

  static Spectrum of(const ComplexMatrix& h) {
    // Real symmetric input (common for spin models) takes the faster real solver.
    if (h.size() > 0 && h.imag().cwiseAbs().maxCoeff() == 0.0) {
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(h.real());
      require(es.info() == Eigen::Success, ErrorKind::NumericalBreakdown, "eigensolver failed");
      return {es.eigenvalues(), es.eigenvectors().cast<cplx>()};
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    require(es.info() == Eigen::Success, ErrorKind::NumericalBreakdown, "eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
  }
};

// Weight rho(H) of the operator inner product (X,Y) = 1/2 Tr[rho (X^+ Y + Y X^+)].
//
// uniform(s): rho = s / d_H, so s = 1 gives the normalized trace.
// gibbs(beta): rho = exp(-beta H) / Tr exp(-beta H). Needs the Hamiltonian, so
// a Gibbs measure must be bound (bound_to) before it can weight an inner product.
class Measure {
 public:
  enum class Kind { Uniform, Gibbs };

  static Measure uniform(double scale = 1.0) {
    require(std::isfinite(scale) && scale > 0.0, ErrorKind::InvalidMeasure,
            "uniform measure scale must be positive");
    Measure m;
    m.kind_ = Kind::Uniform;
    m.scale_ = scale;
    return m;
  }

  static Measure gibbs(double beta) {
    require(std::isfinite(beta) && beta >= 0.0, ErrorKind::InvalidMeasure,
            "Gibbs inverse temperature must be non-negative");
    Measure m;
    m.kind_ = Kind::Gibbs;
    m.beta_ = beta;
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_uniform() const noexcept { return kind_ == Kind::Uniform; }
  double scale() const noexcept { return scale_; }
  double beta() const noexcept { return beta_; }
  bool is_bound() const noexcept { return static_cast<bool>(spectrum_); }

  // Binds a Gibbs measure to the dense Hamiltonian h. Uniform measures are
  // returned unchanged.
  Measure bound_to(const ComplexMatrix& h) const {
    if (kind_ == Kind::Uniform) return *this;
    Measure m = *this;
    m.spectrum_ = std::make_shared<const Spectrum>(Spectrum::of(h));
    return m;
  }

  // Same, reusing an existing eigen-decomposition.
  Measure bound_to(std::shared_ptr<const Spectrum> spec) const {
    if (kind_ == Kind::Uniform) return *this;
    Measure m = *this;
    m.spectrum_ = std::move(spec);
    return m;
  }

  const Spectrum& spectrum() const {
    require(is_bound(), ErrorKind::InvalidMeasure, "Gibbs measure used before binding to H");
    return *spectrum_;
  }

  // Diagonal weights of rho in the eigenbasis of H (uniform: s/d for every level).
  RealVector weights(const RealVector& energies) const {
    const auto d = energies.size();
    if (kind_ == Kind::Uniform) return RealVector::Constant(d, scale_ / static_cast<double>(d));
    const double e0 = energies.minCoeff();
    RealVector w = (-beta_ * (energies.array() - e0)).exp().matrix();
    return w / w.sum();
  }

  // Dense rho in the computational basis.
  ComplexMatrix density(std::size_t dim) const {
    if (kind_ == Kind::Uniform)
      return ComplexMatrix::Identity(dim, dim) * (scale_ / static_cast<double>(dim));
    const Spectrum& s = spectrum();
    require(static_cast<std::size_t>(s.energies.size()) == dim, ErrorKind::SiteCountMismatch,
            "Gibbs measure bound to a different dimension");
    const RealVector w = weights(s.energies);
    return s.vectors * w.cast<cplx>().asDiagonal() * s.vectors.adjoint();
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind_ == Kind::Uniform)
      os << "uniform(" << scale_ << ")";
    else
      os << "gibbs(" << beta_ << ")";
    return os.str();
  }

 private:
  Measure() = default;
  Kind kind_ = Kind::Uniform;
  double scale_ = 1.0;
  double beta_ = 0.0;
  std::shared_ptr<const Spectrum> spectrum_;
};

}  // namespace kcd
