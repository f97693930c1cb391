#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "kcd/agp/solver.hpp"

namespace kcd {

// G[A] = (R, R) with R = dH - i[H, A].
inline double variational_cost(const OperatorExpr& h, const OperatorExpr& dh, const OperatorExpr& a,
                               const Measure& rho) {
  OperatorExpr r = dh;
  r.axpy(cplx{0.0, -1.0}, apply_liouvillian(h, a));
  return inner_product(r, r, detail::bind(rho, h)).real();
}

struct TruncatedCd {
  KrylovChain chain;
  AgpExpansion expansion;            // cd_operator is structured over (X; Y)
  std::vector<double> coefficients;  // H_CD = sum_mu c_mu Y_mu
  OperatorExpr cd_operator;          // same operator in the element backend
  LiouvillianMatrix l;
};

namespace detail {

// Operators in a common backend: dense when the measure is Gibbs.
inline OperatorExpr working_form(const OperatorExpr& op, const Measure& rho) {
  return rho.is_uniform() ? op : to_dense(op);
}

// Modified Gram-Schmidt (two passes); candidates whose remaining norm is
// below rel_tol of their original norm are dropped.
inline std::vector<OperatorExpr> orthonormalize(const std::vector<OperatorExpr>& cands, const Measure& rho,
                                                double rel_tol = 1e-10) {
  std::vector<OperatorExpr> out;
  for (const auto& c : cands) {
    const double n0 = operator_norm(c, rho);
    if (n0 == 0.0) continue;
    OperatorExpr v = c;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : out) v.axpy(-inner_product(q, v, rho), q);
    const double n1 = operator_norm(v, rho);
    if (n1 <= rel_tol * n0) continue;
    v *= 1.0 / n1;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

// CD term restricted to span(Y): the Krylov chain runs on the block
// M_{mu nu} = (X_mu, L Y_nu) where X orthonormalizes {dH, i L Y_nu}, so that
// L maps span(Y) into span(X) exactly. Equivalent to minimizing G[A] over
// A in span(Y).
inline TruncatedCd truncated_cd(const OperatorExpr& h, const OperatorExpr& dh,
                                const std::vector<OperatorExpr>& y_basis, const Measure& rho,
                                const LanczosOptions& opt = {}) {
  require(!y_basis.empty(), ErrorKind::InvalidArgument, "empty restricted basis");
  const Measure r = detail::bind(rho, h);
  const OperatorExpr hw = detail::working_form(h, r);
  const OperatorExpr dhw = detail::working_form(dh, r);
  std::vector<OperatorExpr> ys;
  for (const auto& y : y_basis) ys.push_back(detail::working_form(y, r));

  const ComplexMatrix gy = gram_matrix(ys, r);
  const double dev = (gy - ComplexMatrix::Identity(gy.rows(), gy.cols())).cwiseAbs().maxCoeff();
  require(dev <= 1e-10, ErrorKind::NonOrthonormalBasis,
          "restricted basis Gram matrix deviates by " + std::to_string(dev));

  std::vector<OperatorExpr> lys, cands{dhw};
  for (const auto& y : ys) {
    lys.push_back(apply_liouvillian(hw, y));
    cands.push_back(cplx{0.0, 1.0} * lys.back());
  }
  const double b0 = operator_norm(dhw, r);
  require(b0 > 0.0, ErrorKind::ZeroDerivative, "dH vanishes");
  std::vector<OperatorExpr> xs = detail::orthonormalize(cands, r);

  const auto dx = static_cast<Eigen::Index>(xs.size()), dy = static_cast<Eigen::Index>(ys.size());
  ComplexMatrix m(dx, dy);
  for (Eigen::Index a = 0; a < dx; ++a)
    for (Eigen::Index b = 0; b < dy; ++b) m(a, b) = cplx{0.0, inner_product(xs[a], lys[b], r).imag()};

  std::vector<OperatorExpr> elements = xs;
  elements.insert(elements.end(), ys.begin(), ys.end());
  std::vector<Sector> sectors(dx, Sector::Even);
  sectors.insert(sectors.end(), dy, Sector::Odd);
  auto basis = std::make_shared<const BasisDeclaration>(BasisDeclaration::of(std::move(elements), sectors));

  TruncatedCd out;
  out.l = LiouvillianMatrix::from_block(m.sparseView(0.0, 0.0), basis);
  ComplexVector theta0 = ComplexVector::Zero(dx + dy);
  theta0[0] = 1.0;
  out.chain = build_chain_from_matrix(out.l, theta0, opt, b0);
  out.chain.measure = r;
  out.expansion = assemble_cd(out.chain, solve_alpha(out.chain.b));
  const ComplexVector& c = out.expansion.cd_operator.structured().coords;
  for (Eigen::Index b = 0; b < dy; ++b) out.coefficients.push_back(c[dx + b].real());
  out.cd_operator = basis->expand(c);
  return out;
}

struct LeastSquaresCd {
  RealVector coefficients;
  bool rank_deficient = false;
  double cost = 0.0;
};

// Direct minimizer of G[A] = ||dH - i L A||^2 over A = sum_mu a_mu Y_mu via
// the normal equations in the dense representation (minimal-norm solution
// when they are singular).
inline LeastSquaresCd least_squares_variational_oracle(const OperatorExpr& h, const OperatorExpr& dh,
                                                       const std::vector<OperatorExpr>& ansatz,
                                                       const Measure& rho) {
  const OperatorExpr hd = to_dense(h), dd = to_dense(dh);
  const Measure r = detail::bind(rho, hd);
  const auto n = static_cast<Eigen::Index>(ansatz.size());
  std::vector<OperatorExpr> z;
  for (const auto& y : ansatz) {
    const ComplexMatrix ym = to_dense(y).dense();
    z.emplace_back(ComplexMatrix(cplx{0.0, 1.0} * (hd.dense() * ym - ym * hd.dense())));
  }
  RealMatrix g(n, n);
  RealVector rhs(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    rhs[a] = inner_product(z[a], dd, r).real();
    for (Eigen::Index b = 0; b < n; ++b) g(a, b) = inner_product(z[a], z[b], r).real();
  }
  LeastSquaresCd out;
  if (n == 0) {
    out.coefficients = RealVector();
    out.cost = inner_product(dd, dd, r).real();
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(g);
  cod.setThreshold(1e-12);
  out.coefficients = cod.solve(rhs);
  out.rank_deficient = cod.rank() < n;
  OperatorExpr res = dd;
  for (Eigen::Index a = 0; a < n; ++a) res.axpy(-out.coefficients[a], z[a]);
  out.cost = inner_product(res, res, r).real();
  return out;
}

struct FirstOrderNc {
  double alpha_nc = 0.0;  // A = i alpha_nc L dH
  AgpExpansion expansion;
};

// Single nested commutator: alpha_nc = -(L dH, L dH) / (L^2 dH, L^2 dH).
inline FirstOrderNc first_order_nc_cd(const OperatorExpr& h, const OperatorExpr& dh, const Measure& rho) {
  const Measure r = detail::bind(rho, h);
  const OperatorExpr hw = detail::working_form(h, r), dhw = detail::working_form(dh, r);
  const OperatorExpr l1 = apply_liouvillian(hw, dhw);
  const OperatorExpr l2 = apply_liouvillian(hw, l1);
  const double n1 = inner_product(l1, l1, r).real();
  const double n2 = inner_product(l2, l2, r).real();
  require(n1 > 0.0 && n2 > 0.0, ErrorKind::ZeroDerivative, "[H, dH] vanishes");
  FirstOrderNc out;
  out.alpha_nc = -n1 / n2;
  const double b0 = operator_norm(dhw, r);
  const double b1 = std::sqrt(n1) / b0;
  out.expansion.b0 = b0;
  out.expansion.alpha = {out.alpha_nc * b1};
  out.expansion.cd_operator = cplx{0.0, out.alpha_nc} * l1;
  return out;
}

}  // namespace kcd
