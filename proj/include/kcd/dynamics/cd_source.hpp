#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kcd/agp/solver.hpp"
#include "kcd/agp/variational.hpp"
#include "kcd/models/model.hpp"

namespace kcd {

enum class CdKind {
  None,
  Exact,         // full Krylov chain in the model's backend
  Spectral,      // sum over all eigenpairs; rejects dH-coupled degeneracies
  Tracked,       // spectral, restricted to the rows and columns of one level
  Truncated,     // Krylov on a restricted Y basis
  FirstOrderNc,  // single nested commutator
};

inline const char* to_string(CdKind k) {
  switch (k) {
    case CdKind::None: return "none";
    case CdKind::Exact: return "exact";
    case CdKind::Spectral: return "spectral";
    case CdKind::Tracked: return "tracked";
    case CdKind::Truncated: return "truncated";
    case CdKind::FirstOrderNc: return "first_order_nc";
  }
  return "?";
}

inline CdKind parse_cd_kind(const std::string& s) {
  for (CdKind k : {CdKind::None, CdKind::Exact, CdKind::Spectral, CdKind::Tracked, CdKind::Truncated,
                   CdKind::FirstOrderNc})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::InvalidArgument, "unknown CD source '" + s + "'");
}

struct CdSource {
  CdKind kind = CdKind::None;
  std::vector<OperatorExpr> basis;  // Truncated only
  std::optional<Measure> measure;   // defaults to the model's measure
  int level = 0;                    // Tracked only; index in ascending energy order
  // Dense copies of the truncated basis, shared between copies of the source.
  std::shared_ptr<std::vector<ComplexMatrix>> dense_basis;

  static CdSource none() { return {}; }
  static CdSource exact() { return {CdKind::Exact, {}, std::nullopt, 0, nullptr}; }
  static CdSource spectral() { return {CdKind::Spectral, {}, std::nullopt, 0, nullptr}; }
  static CdSource tracked(int level = 0) { return {CdKind::Tracked, {}, std::nullopt, level, nullptr}; }
  static CdSource truncated(std::vector<OperatorExpr> basis) {
    CdSource s{CdKind::Truncated, std::move(basis), std::nullopt, 0, nullptr};
    s.dense_basis = std::make_shared<std::vector<ComplexMatrix>>();
    for (const auto& y : s.basis) s.dense_basis->push_back(to_dense(y).dense());
    return s;
  }
  static CdSource first_order_nc() { return {CdKind::FirstOrderNc, {}, std::nullopt, 0, nullptr}; }
};

// i sum_{m != n} |m><m|dH|n>/(e_n - e_m) <n| + h.c. for the n-th level.
// Exact on that level: A|n> equals the full gauge potential applied to |n>.
inline ComplexMatrix tracked_level_agp(const ComplexMatrix& h, const ComplexMatrix& dh, int level,
                                       double gap_tol = 1e-10) {
  const Spectrum s = Spectrum::of(h);
  const auto dim = s.energies.size();
  require(level >= 0 && level < dim, ErrorKind::InvalidArgument, "tracked level out of range");
  const double scale = std::max(s.energies.cwiseAbs().maxCoeff(), 1e-300);
  const ComplexVector col = s.vectors.adjoint() * (dh * s.vectors.col(level));
  ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index m = 0; m < dim; ++m) {
    if (m == level) continue;
    const double gap = s.energies[level] - s.energies[m];
    require(std::abs(gap) > gap_tol * scale, ErrorKind::LevelCrossing,
            "tracked level " + std::to_string(level) + " is degenerate with level " + std::to_string(m));
    a(m, level) = cplx{0.0, 1.0} * col[m] / gap;
    a(level, m) = std::conj(a(m, level));
  }
  return s.vectors * a * s.vectors.adjoint();
}

namespace detail {

inline bool vanishes(const OperatorExpr& op) {
  switch (op.backend()) {
    case Backend::PauliSum: return op.pauli().empty() || op.pauli().max_abs_coefficient() == 0.0;
    case Backend::Dense: return op.dense().size() == 0 || op.dense().cwiseAbs().maxCoeff() == 0.0;
    case Backend::Structured: return op.structured().coords.cwiseAbs().maxCoeff() == 0.0;
  }
  return false;
}

inline Eigen::Index dense_dimension(const OperatorExpr& op) {
  if (op.is_dense()) return op.dense().rows();
  if (op.is_pauli()) return Eigen::Index{1} << op.site_count();
  return to_dense(op).dense().rows();
}

}  // namespace detail

// Dense H_CD for given H and dH. dH already carries lambda-dot, so the result
// is lambda-dot times the gauge potential. Zero when dH (or [H, dH] for the
// nested-commutator form) vanishes.
inline ComplexMatrix cd_operator_dense(const OperatorExpr& h, const OperatorExpr& dh, const Measure& rho,
                                       const CdSource& src) {
  const Eigen::Index dim = detail::dense_dimension(h);
  if (src.kind == CdKind::None || detail::vanishes(dh)) return ComplexMatrix::Zero(dim, dim);
  switch (src.kind) {
    case CdKind::Exact: return to_dense(krylov_cd(build_krylov_chain(h, dh, rho)).cd_operator).dense();
    case CdKind::Spectral: return spectral_agp_oracle(to_dense(h).dense(), to_dense(dh).dense());
    case CdKind::Tracked: return tracked_level_agp(to_dense(h).dense(), to_dense(dh).dense(), src.level);
    case CdKind::Truncated: {
      const TruncatedCd t = truncated_cd(h, dh, src.basis, rho);
      if (!src.dense_basis) return to_dense(t.cd_operator).dense();
      ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
      for (std::size_t mu = 0; mu < t.coefficients.size(); ++mu) out += t.coefficients[mu] * (*src.dense_basis)[mu];
      return out;
    }
    case CdKind::FirstOrderNc:
      try {
        return to_dense(first_order_nc_cd(h, dh, rho).expansion.cd_operator).dense();
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ZeroDerivative) return ComplexMatrix::Zero(dim, dim);
        throw;
      }
    case CdKind::None: break;
  }
  return ComplexMatrix::Zero(dim, dim);
}

// Same at the protocol point (p, pdot) of a model.
inline ComplexMatrix cd_operator_dense(const ModelSpec& m, const CdSource& src, const Params& p,
                                       const Params& pdot) {
  return cd_operator_dense(m.h(p), m.dh(p, pdot), src.measure.value_or(m.measure), src);
}

}  // namespace kcd
