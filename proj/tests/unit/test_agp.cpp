#include <gtest/gtest.h>

#include <random>

#include "kcd/agp/solver.hpp"
#include "kcd/agp/variational.hpp"
#include "kcd/agp/wavefunction.hpp"
#include "kcd/models/ising.hpp"
#include "kcd/models/xx.hpp"
#include "support.hpp"

using namespace kcd;
using kcd::test::max_abs;
using kcd::test::random_hermitian;

namespace {

std::vector<double> random_b(int d, std::mt19937_64& rng) {
  std::vector<double> b(d);
  b[0] = 0.5 + 2.0 * unit_uniform(rng);
  for (int n = 1; n < d; ++n) b[n] = 0.2 + 2.0 * unit_uniform(rng);
  return b;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(AgpSolver, EvenRecurrenceSolvesDefiningEquationExactly) {
  std::mt19937_64 rng(1);
  for (int d : {2, 4, 10, 40}) {
    const auto b = random_b(d, rng);
    const auto alpha = solve_alpha_even(b);
    ASSERT_EQ(static_cast<int>(alpha.size()), d / 2);
    EXPECT_LT(agp_residual(b, alpha).direct, 1e-10 * b[0]);
  }
}

TEST(AgpSolver, OddRoutesAgree) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 * static_cast<int>(rng() % 20) + 3;
    const auto b = random_b(d, rng);
    const auto tri = solve_alpha_odd_tridiagonal(b);
    const auto zm = solve_alpha_odd_zero_mode(b).alpha;
    const auto lap = alpha_via_laplace(BMatrix{b});
    double scale = 0.0;
    for (double a : tri) scale = std::max(scale, std::abs(a));
    EXPECT_LT(max_diff(tri, zm), 1e-9 * scale) << "d = " << d;
    EXPECT_LT(max_diff(tri, lap), 1e-9 * scale) << "d = " << d;
    // Odd d: only the projected residual L r vanishes.
    EXPECT_LT(agp_residual(b, tri).projected, 1e-9 * b[0]);
    EXPECT_NO_THROW(agp_norm(b, tri));
  }
}

TEST(AgpSolver, EvenLaplaceRouteAgrees) {
  std::mt19937_64 rng(3);
  for (int d : {2, 6, 20}) {
    const auto b = random_b(d, rng);
    EXPECT_LT(max_diff(solve_alpha_even(b), alpha_via_laplace(BMatrix{b})), 1e-9);
  }
}

TEST(AgpSolver, WrongRouteAndBadCoefficients) {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Config;
  };
  EXPECT_EQ(kind_of([] { solve_alpha_even({1, 1, 1}); }), ErrorKind::WrongRoute);
  EXPECT_EQ(kind_of([] { solve_alpha_odd_tridiagonal({1, 1}); }), ErrorKind::WrongRoute);
  EXPECT_EQ(kind_of([] { zero_mode({1, 1, 1, 1}); }), ErrorKind::WrongRoute);
  EXPECT_EQ(kind_of([] { solve_alpha_even({1, 1, -1, 1}); }), ErrorKind::InvalidArgument);
}

TEST(AgpSolver, ShortChains) {
  // d = 3: alpha_1 = -b_1/(b_1^2 + b_2^2).
  const auto a = solve_alpha({2.0, 3.0, 4.0});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_DOUBLE_EQ(a[0], -3.0 / 25.0);
  EXPECT_TRUE(solve_alpha({1.0}).empty());
}

TEST(AgpSolver, NormIdentityHoldsForBothParities) {
  std::mt19937_64 rng(4);
  for (int d = 2; d <= 15; ++d) {
    const auto b = random_b(d, rng);
    const AgpNorm n = agp_norm(b, solve_alpha(b));
    EXPECT_NEAR(n.value, n.via_projector, 1e-9 * n.value) << "d = " << d;
  }
}

TEST(ZeroMode, IsNullVectorOfB) {
  std::mt19937_64 rng(5);
  for (int d : {3, 7, 21}) {
    const auto b = random_b(d, rng);
    const RealVector phi = zero_mode(b);
    EXPECT_NEAR(phi.norm(), 1.0, 1e-14);
    EXPECT_LT((BMatrix{b}.dense() * phi).norm(), 1e-12);
  }
}

TEST(WaveFunction, EvolutionIsNormPreservingAndSolvesOde) {
  std::mt19937_64 rng(6);
  const auto b = random_b(9, rng);
  const BMatrix bm{b};
  const RealMatrix bd = bm.dense();
  for (double s : {0.0, 0.7, 3.1}) {
    const RealVector phi = evolve_wavefunction(bm, s);
    EXPECT_NEAR(phi.norm(), 1.0, 1e-12);
    const double h = 1e-5;
    const RealVector dphi = (evolve_wavefunction(bm, s + h) - evolve_wavefunction(bm, s - h)) / (2 * h);
    EXPECT_LT((dphi - bd * phi).norm(), 1e-8);
  }
  // Odd d: the overlap with the zero mode is conserved.
  const RealVector z = zero_mode(b);
  EXPECT_NEAR(z.dot(evolve_wavefunction(bm, 50.0)), z[0], 1e-10);
}

TEST(WaveFunction, StylizedProfiles) {
  const auto lin = stylized_profile(BProfile::Linear, 5, 2.0);
  EXPECT_EQ(lin, (std::vector<double>{1, 2, 4, 6, 8}));
  const auto su2 = stylized_profile(BProfile::SU2, 5);
  EXPECT_DOUBLE_EQ(su2[1], 2.0);
  EXPECT_DOUBLE_EQ(su2[2], std::sqrt(6.0));
  // su2 profile: B generates a rotation; iB has the equidistant spectrum -2..2.
  const auto es = eigensystem(BMatrix{su2});
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(es.omega[j], 2.0 * (j - 2), 1e-12);
  EXPECT_THROW(stylized_profile(BProfile::Sqrt, 0), Error);
}

TEST(SpectralOracle, MatchesKrylovCdOnRandomDenseModels) {
  std::mt19937_64 rng(7);
  for (int dim : {2, 3, 5, 7}) {
    const ComplexMatrix h = random_hermitian(dim, rng), dh = random_hermitian(dim, rng);
    const ComplexMatrix ref = spectral_agp_oracle(h, dh);
    for (const Measure& rho : {Measure::uniform(), Measure::gibbs(1.0), Measure::gibbs(3.0)}) {
      const KrylovChain c = build_krylov_chain(OperatorExpr(h), OperatorExpr(dh), rho);
      const ComplexMatrix cd = krylov_cd(c).cd_operator.dense();
      EXPECT_LT(max_abs(cd - ref), 1e-8 * std::max(1.0, max_abs(ref))) << dim << " " << rho.describe();
    }
  }
}

TEST(SpectralOracle, SolvesDefiningEquation) {
  // [dH + i[A, H], H] = 0 for the exact gauge potential.
  std::mt19937_64 rng(8);
  const ComplexMatrix h = random_hermitian(6, rng), dh = random_hermitian(6, rng);
  const ComplexMatrix a = spectral_agp_oracle(h, dh);
  const ComplexMatrix g = dh + cplx{0, 1} * (a * h - h * a);
  EXPECT_LT(max_abs(g * h - h * g), 1e-10);
}

TEST(SpectralOracle, CoupledDegenerateLevelsThrow) {
  ComplexMatrix h = ComplexMatrix::Zero(3, 3);
  h.diagonal() << 1.0, 1.0, 2.0;
  ComplexMatrix dh = ComplexMatrix::Zero(3, 3);
  dh(0, 1) = dh(1, 0) = 0.5;
  try {
    (void)spectral_agp_oracle(h, dh);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IllDefinedAgp);
  }
  dh.setZero();
  dh(0, 2) = dh(2, 0) = 1.0;
  EXPECT_NO_THROW(spectral_agp_oracle(h, dh));
}

TEST(Variational, TruncatedCdMatchesLeastSquaresOnIsing) {
  const int n = 6;
  const ModelSpec m = ising_longitudinal_spec(n, 1.0, 1.0, 1.0);
  const auto ys = ising_ops::restricted_y(n);
  for (double g : {0.2, 0.5, 0.8}) {
    const OperatorExpr h = m.h({{"g", g}}), dh = m.dh({{"g", g}}, {{"g", 1.0}});
    for (std::size_t size : {std::size_t{1}, std::size_t{3}}) {
      std::vector<OperatorExpr> basis(ys.begin(), ys.begin() + size);
      const TruncatedCd t = truncated_cd(h, dh, basis, m.measure);
      const LeastSquaresCd ls = least_squares_variational_oracle(h, dh, basis, m.measure);
      for (std::size_t i = 0; i < size; ++i) EXPECT_NEAR(t.coefficients[i], ls.coefficients[i], 1e-8);
      EXPECT_NEAR(variational_cost(h, dh, t.cd_operator, m.measure), ls.cost, 1e-8);
    }
  }
}

TEST(Variational, TruncatedCdMatchesLeastSquaresOnRandomXxBases) {
  const int n_s = 6;
  std::mt19937_64 rng(9);
  const XxLayout lay(n_s, true);
  const auto& els = lay.basis()->elements();
  for (int trial = 0; trial < 5; ++trial) {
    XxFields f, df;
    for (int i = 1; i < n_s; ++i) f.v.push_back(2 * unit_uniform(rng) - 1), df.v.push_back(2 * unit_uniform(rng) - 1);
    for (int i = 1; i <= n_s; ++i) f.h.push_back(2 * unit_uniform(rng) - 1), df.h.push_back(2 * unit_uniform(rng) - 1);
    const ModelSpec m = xx_spec(n_s);
    const OperatorExpr h = m.h(xx_params(f)), dh = m.dh(xx_params(f), xx_params(df));
    std::vector<OperatorExpr> basis;
    for (int c = 0; c < lay.y_size(); ++c)
      if (unit_uniform(rng) < 0.4) basis.push_back(els[lay.x_size() + c]);
    if (basis.empty()) basis.push_back(els[lay.x_size()]);
    const TruncatedCd t = truncated_cd(h, dh, basis, m.measure);
    const LeastSquaresCd ls = least_squares_variational_oracle(h, dh, basis, m.measure);
    for (std::size_t i = 0; i < basis.size(); ++i) EXPECT_NEAR(t.coefficients[i], ls.coefficients[i], 1e-8);
  }
}

TEST(Variational, FullKrylovBasisReproducesExactCd) {
  std::mt19937_64 rng(10);
  const ComplexMatrix h = random_hermitian(4, rng), dh = random_hermitian(4, rng);
  const OperatorExpr hh(h), dd(dh);
  const Measure rho = Measure::uniform();
  const KrylovChain c = build_krylov_chain(hh, dd, rho);
  std::vector<OperatorExpr> ys;
  for (int n = 1; n < c.d(); n += 2) ys.push_back(cplx{0, 1} * c.basis[n]);
  const TruncatedCd t = truncated_cd(hh, dd, ys, rho);
  const ComplexMatrix exact = spectral_agp_oracle(h, dh);
  EXPECT_LT(max_abs(to_dense(t.cd_operator).dense() - exact), 1e-8);
  EXPECT_EQ(t.chain.d(), c.d());
}

TEST(Variational, CostDecreasesWithBasisSize) {
  const int n = 6;
  const ModelSpec m = ising_longitudinal_spec(n, 1.0, 0.5, 1.0);
  const OperatorExpr h = m.h({{"g", 0.4}}), dh = m.dh({{"g", 0.4}}, {{"g", 1.0}});
  const auto ys = ising_ops::restricted_y(n);
  double prev = inner_product(dh, dh, m.measure).real();
  for (std::size_t size = 1; size <= ys.size(); ++size) {
    const TruncatedCd t = truncated_cd(h, dh, {ys.begin(), ys.begin() + size}, m.measure);
    const double cost = variational_cost(h, dh, t.cd_operator, m.measure);
    EXPECT_LE(cost, prev + 1e-12);
    prev = cost;
  }
}

TEST(Variational, FirstOrderNestedCommutatorIsOneTermLeastSquares) {
  std::mt19937_64 rng(11);
  const ComplexMatrix h = random_hermitian(5, rng), dh = random_hermitian(5, rng);
  const OperatorExpr hh(h), dd(dh);
  const Measure rho = Measure::uniform();
  const FirstOrderNc nc = first_order_nc_cd(hh, dd, rho);
  OperatorExpr y = cplx{0, 1} * apply_liouvillian(hh, dd);
  y *= 1.0 / operator_norm(y, rho);
  const LeastSquaresCd ls = least_squares_variational_oracle(hh, dd, {y}, rho);
  EXPECT_LT(max_abs(nc.expansion.cd_operator.dense() - ls.coefficients[0] * y.dense()), 1e-10);
  // It is also the first Krylov truncation.
  const TruncatedCd t = truncated_cd(hh, dd, {y}, rho);
  EXPECT_LT(max_abs(to_dense(t.cd_operator).dense() - nc.expansion.cd_operator.dense()), 1e-10);
  EXPECT_THROW(first_order_nc_cd(hh, hh, rho), Error);
}

TEST(Variational, NonOrthonormalBasisRejected) {
  const int n = 4;
  const ModelSpec m = ising_longitudinal_spec(n, 1.0, 1.0, 1.0);
  const OperatorExpr h = m.h({{"g", 0.5}}), dh = m.dh({{"g", 0.5}}, {{"g", 1.0}});
  const auto ys = ising_ops::restricted_y(n);
  EXPECT_THROW(truncated_cd(h, dh, {OperatorExpr(2.0 * ys[0])}, m.measure), Error);
}
