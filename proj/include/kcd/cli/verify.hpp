#pragma once

#include <chrono>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kcd/agp/variational.hpp"
#include "kcd/agp/wavefunction.hpp"
#include "kcd/dynamics/evolve.hpp"
#include "kcd/models/ising.hpp"
#include "kcd/models/norm_fraction.hpp"
#include "kcd/models/oscillator.hpp"
#include "kcd/models/stirap.hpp"
#include "kcd/models/tfim.hpp"
#include "kcd/models/toda.hpp"
#include "kcd/models/two_level.hpp"
#include "kcd/models/xx.hpp"

namespace kcd::cli {

struct VerifyOptions {
  // Test hook: scales one Lanczos coefficient by (1 + perturb_b) wherever a
  // check consumes a computed chain. Zero leaves everything untouched.
  double perturb_b = 0.0;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // largest violation measured, in the check's own units
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string note;
};

namespace verify_detail {

inline double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline ComplexMatrix random_hermitian(int dim, std::mt19937_64& rng) {
  ComplexMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = cplx{2 * unit_uniform(rng) - 1, 2 * unit_uniform(rng) - 1};
  return 0.5 * (a + a.adjoint());
}

inline std::vector<double> random_b(int d, std::mt19937_64& rng) {
  std::vector<double> b(d);
  b[0] = 0.5 + 2.0 * unit_uniform(rng);
  for (int n = 1; n < d; ++n) b[n] = 0.2 + 2.0 * unit_uniform(rng);
  return b;
}

// Applies the fault-injection hook to a computed coefficient list.
inline void tamper(std::vector<double>& b, const VerifyOptions& opt) {
  if (opt.perturb_b != 0.0 && b.size() > 2) b[2] *= 1.0 + opt.perturb_b;
}

struct Check {
  std::string name;
  double tolerance;
  std::function<double(const VerifyOptions&)> worst;  // returns the largest violation
};

inline std::vector<Check> checks() {
  std::vector<Check> c;

  c.push_back({"pauli_products_match_dense", 1e-12, [](const VerifyOptions&) {
                 std::mt19937_64 rng(1);
                 double w = 0.0;
                 const int n = 4;
                 for (int t = 0; t < 50; ++t) {
                   const PauliString a(n, rng() & 15, rng() & 15), b(n, rng() & 15, rng() & 15);
                   w = std::max(w, max_abs(PauliSum(a * b).to_dense() - PauliSum(a).to_dense() * PauliSum(b).to_dense()));
                 }
                 return w;
               }});

  c.push_back({"liouvillian_self_adjoint", 1e-12, [](const VerifyOptions&) {
                 std::mt19937_64 rng(2);
                 const ComplexMatrix hm = random_hermitian(6, rng);
                 const OperatorExpr h(hm), x(random_hermitian(6, rng)), y(random_hermitian(6, rng));
                 double w = 0.0;
                 for (const Measure& rho : {Measure::uniform(), Measure::gibbs(0.8)}) {
                   const Measure r = rho.bound_to(hm);
                   w = std::max(w, std::abs(inner_product(x, apply_liouvillian(h, y), r) -
                                            inner_product(apply_liouvillian(h, x), y, r)));
                 }
                 return w;
               }});

  c.push_back({"lanczos_orthonormal_tridiagonal", 1e-10, [](const VerifyOptions&) {
                 std::mt19937_64 rng(3);
                 const OperatorExpr h(random_hermitian(5, rng)), dh(random_hermitian(5, rng));
                 double w = 0.0;
                 for (const Measure& rho : {Measure::uniform(), Measure::gibbs(1.3)}) {
                   const KrylovChain ch = build_krylov_chain(h, dh, rho);
                   if (ch.d() != 21) return 1.0;
                   w = std::max(w, chain_orthonormality_error(ch));
                   // (O_m, L O_n) vanishes unless |m - n| = 1.
                   for (int m = 0; m < ch.d(); ++m)
                     for (int n = m + 2; n < ch.d(); ++n)
                       w = std::max(w, std::abs(inner_product(ch.basis[m], apply_liouvillian(h, ch.basis[n]),
                                                              ch.measure)));
                 }
                 return w;
               }});

  c.push_back({"fixed_spectrum_gives_even_dimension", 0.0, [](const VerifyOptions&) {
                 std::mt19937_64 rng(4);
                 const ComplexMatrix h = random_hermitian(4, rng), g = random_hermitian(4, rng);
                 const ComplexMatrix dh = cplx{0, 1} * (h * g - g * h);
                 const KrylovChain ch = build_krylov_chain(OperatorExpr(h), OperatorExpr(dh), Measure::uniform());
                 return ch.d() % 2 == 0 ? 0.0 : 1.0;
               }});

  c.push_back({"two_level_closed_form", 1e-10, [](const VerifyOptions& opt) {
                 std::mt19937_64 rng(5);
                 double w = 0.0;
                 for (int t = 0; t < 20; ++t) {
                   auto u = [&] { return 2 * unit_uniform(rng) - 1; };
                   const auto tc = two_level(0.5 + unit_uniform(rng), {u(), u(), u()}, u(), {u(), u(), u()});
                   KrylovChain ch = build_krylov_chain(tc.spec.h(tc.p), tc.spec.dh(tc.p, tc.pdot), Measure::uniform());
                   tamper(ch.b, opt);
                   if (ch.d() != 3) return 1.0;
                   w = std::max({w, std::abs(ch.b[1] - tc.b1), std::abs(ch.b[2] - tc.b2)});
                   w = std::max(w, max_abs(to_dense(assemble_cd(ch, solve_alpha(ch.b)).cd_operator).dense() -
                                           tc.reference_cd));
                 }
                 return w;
               }});

  c.push_back({"odd_routes_agree", 1e-9, [](const VerifyOptions& opt) {
                 std::mt19937_64 rng(6);
                 double w = 0.0;
                 for (int t = 0; t < 200; ++t) {
                   const int d = 2 * static_cast<int>(rng() % 20) + 3;
                   const auto b = random_b(d, rng);
                   auto bt = b;
                   tamper(bt, opt);
                   const auto tri = solve_alpha_odd_tridiagonal(bt);
                   const auto zm = solve_alpha_odd_zero_mode(b).alpha;
                   const auto lap = alpha_via_laplace(BMatrix{b});
                   double scale = 1e-300;
                   for (double a : zm) scale = std::max(scale, std::abs(a));
                   w = std::max({w, max_diff(tri, zm) / scale, max_diff(lap, zm) / scale});
                   const AgpNorm nrm = agp_norm(b, zm);
                   w = std::max(w, std::abs(nrm.value - nrm.via_projector) / nrm.value);
                 }
                 return w;
               }});

  c.push_back({"even_recurrence_residual", 1e-10, [](const VerifyOptions&) {
                 std::mt19937_64 rng(7);
                 double w = 0.0;
                 for (int d : {2, 4, 10, 40}) {
                   const auto b = random_b(d, rng);
                   w = std::max(w, agp_residual(b, solve_alpha_even(b)).direct / b[0]);
                 }
                 return w;
               }});

  c.push_back({"zero_mode_null_vector", 1e-12, [](const VerifyOptions&) {
                 std::mt19937_64 rng(8);
                 const auto b = random_b(15, rng);
                 return (BMatrix{b}.dense() * zero_mode(b)).cwiseAbs().maxCoeff();
               }});

  c.push_back({"wavefunction_norm_conserved", 1e-12, [](const VerifyOptions&) {
                 std::mt19937_64 rng(9);
                 const BMatrix bm{random_b(12, rng)};
                 double w = 0.0;
                 for (double s : {0.3, 2.0, 7.5}) w = std::max(w, std::abs(evolve_wavefunction(bm, s).norm() - 1.0));
                 return w;
               }});

  c.push_back({"oscillator_closed_form", 1e-8, [](const VerifyOptions& opt) {
                 const auto oc = harmonic_oscillator(0.7, 1.3, 0.2, 0.9, 0.4);
                 KrylovChain ch = build_chain_from_matrix(oc.l, oc.theta0, {}, oc.b0);
                 tamper(ch.b, opt);
                 if (ch.d() != 5) return 1.0;
                 const auto ref = oc.closed_form_b();
                 double w = 0.0;
                 for (int n = 1; n <= 4; ++n) w = std::max(w, std::abs(ch.b[n] - ref[n - 1]));
                 const auto e = assemble_cd(ch, solve_alpha(ch.b));
                 return std::max(w, (e.cd_operator.structured().coords - oc.reference_cd).cwiseAbs().maxCoeff());
               }});

  c.push_back({"stirap_angle_formula", 1e-8, [](const VerifyOptions& opt) {
                 const auto proto = stirap_protocol();
                 double w = 0.0;
                 for (double t : {25.0, 38.0, 47.0, 56.0, 71.0}) {
                   const Params p = proto.lambda(t), pd = proto.lambda_dot(t);
                   const auto sc = stirap(param(p, "delta"), param(p, "wp"), param(p, "ws"), param(pd, "delta"),
                                          param(pd, "wp"), param(pd, "ws"));
                   KrylovChain ch = build_chain_from_matrix(sc.l, sc.theta0, {}, sc.b0);
                   tamper(ch.b, opt);
                   if (ch.d() != 7) return 1.0;
                   const auto e = assemble_cd(ch, solve_alpha(ch.b));
                   w = std::max(w, max_abs(sc.basis->expand(e.cd_operator.structured().coords).dense() -
                                           sc.reference_cd));
                 }
                 return w;
               }});

  c.push_back({"tfim_sum_rules_and_alpha", 1e-9, [](const VerifyOptions& opt) {
                 const int n_s = 6;
                 const double v = 1.0, g = 0.6, gd = 0.3;
                 const ModelSpec m = tfim_spec(n_s, v);
                 KrylovChain ch = build_krylov_chain(m.h({{"g", g}}), m.dh({{"g", g}}, {{"g", gd}}), m.measure);
                 tamper(ch.b, opt);
                 if (ch.d() != 2 * n_s - 1) return 1.0;
                 double w = std::abs(ch.b[1] - std::sqrt(2.0) * v);
                 for (int k = 1; 2 * k < ch.d(); ++k)
                   w = std::max(w, std::abs(ch.b[2 * k - 1] * ch.b[2 * k - 1] + ch.b[2 * k] * ch.b[2 * k] -
                                            4 * v * v * (1 + g * g)));
                 for (int k = 1; 2 * k + 1 < ch.d(); ++k)
                   w = std::max(w, std::abs(ch.b[2 * k] * ch.b[2 * k + 1] - 4 * v * v * g));
                 return std::max(w, max_diff(solve_alpha(ch.b), tfim_closed_form_alpha(n_s, v, g)));
               }});

  c.push_back({"spectral_oracle_equivalence", 1e-8, [](const VerifyOptions& opt) {
                 std::mt19937_64 rng(10);
                 double w = 0.0;
                 for (int dim : {2, 3, 5, 6}) {
                   const ComplexMatrix h = random_hermitian(dim, rng), dh = random_hermitian(dim, rng);
                   const ComplexMatrix ref = spectral_agp_oracle(h, dh);
                   KrylovChain ch = build_krylov_chain(OperatorExpr(h), OperatorExpr(dh), Measure::uniform());
                   tamper(ch.b, opt);
                   const ComplexMatrix cd = to_dense(assemble_cd(ch, solve_alpha(ch.b)).cd_operator).dense();
                   w = std::max(w, max_abs(cd - ref) / std::max(1.0, max_abs(ref)));
                 }
                 return w;
               }});

  c.push_back({"measure_independence", 1e-8, [](const VerifyOptions&) {
                 std::mt19937_64 rng(11);
                 const OperatorExpr h(random_hermitian(5, rng)), dh(random_hermitian(5, rng));
                 const ComplexMatrix a = to_dense(krylov_cd(build_krylov_chain(h, dh, Measure::uniform())).cd_operator).dense();
                 const ComplexMatrix b = to_dense(krylov_cd(build_krylov_chain(h, dh, Measure::gibbs(1.0))).cd_operator).dense();
                 return max_abs(a - b) / std::max(1.0, max_abs(a));
               }});

  c.push_back({"truncated_equals_least_squares", 1e-8, [](const VerifyOptions&) {
                 const int n = 6;
                 const ModelSpec m = ising_longitudinal_spec(n, 1.0, 1.0, 1.0);
                 const auto y = ising_ops::restricted_y(n);
                 const std::vector<OperatorExpr> basis(y.begin(), y.end());
                 const OperatorExpr h = m.h({{"g", 0.4}}), dh = m.dh({{"g", 0.4}}, {{"g", 1.0}});
                 const TruncatedCd t = truncated_cd(h, dh, basis, m.measure);
                 const LeastSquaresCd ls = least_squares_variational_oracle(h, dh, basis, m.measure);
                 const auto& lc = ls.coefficients;
                 return max_diff(t.coefficients, std::vector<double>(lc.data(), lc.data() + lc.size()));
               }});

  c.push_back({"toda_special_flow_two_body", 1e-9, [](const VerifyOptions& opt) {
                 const int n_s = 6;
                 const TodaSpecial toda(n_s, 1.0, 0.3);
                 const XxLayout lay(n_s);
                 double w = 0.0;
                 for (double t : {0.0, 1.1}) {
                   const XxFields f = toda.fields(t), df = toda.derivative(t);
                   const ComplexVector th = xx_derivative_coordinates(lay, df);
                   KrylovChain ch = build_chain_from_matrix(xx_liouvillian(lay, f), th / th.norm(), {}, th.norm());
                   tamper(ch.b, opt);
                   if (ch.d() != 2) return 1.0;
                   const AgpExpansion e = assemble_cd(ch, solve_alpha(ch.b));
                   w = std::max(w, (e.cd_operator.structured().coords - toda_reference_cd(lay, f)).cwiseAbs().maxCoeff());
                   const auto q = norm_fraction(e, ch, BodyRule::Declared);
                   for (std::size_t p = 0; p < q.size(); ++p) w = std::max(w, std::abs(q[p] - (p == 2 ? 1.0 : 0.0)));
                 }
                 return w;
               }});

  c.push_back({"toda_flow_isospectral", 1e-7, [](const VerifyOptions&) {
                 std::mt19937_64 rng(12);
                 XxFields f;
                 for (int n = 1; n < 8; ++n) f.v.push_back(0.5 + 0.5 * unit_uniform(rng));
                 for (int n = 1; n <= 8; ++n) f.h.push_back(2 * unit_uniform(rng) - 1);
                 const RealVector e0 = xx_single_particle_spectrum(f);
                 return (xx_single_particle_spectrum(toda_integrate(f, 50.0, 20000)) - e0).cwiseAbs().maxCoeff();
               }});

  c.push_back({"exact_cd_evolution_follows_reference", 1e-7, [](const VerifyOptions&) {
                 const ModelSpec m = two_level_spec();
                 double w = 0.0;
                 for (double t_f : {0.1, 1.0, 10.0}) {
                   const auto proto = two_level_sweep(1.0, t_f);
                   const auto grid = uniform_grid(0.0, t_f, 10);
                   const auto r = evolve(m, proto, CdSource::exact(), eigenstate(m, proto.lambda(0.0)), grid);
                   const auto ref = adiabatic_reference(m, proto, 0, grid);
                   w = std::max({w, 1.0 - r.final_fidelity(), r.max_norm_error});
                   for (std::size_t i = 0; i < grid.size(); ++i)
                     w = std::max(w, 1.0 - std::norm(ref.states[i].dot(r.states[i])));
                 }
                 return w;
               }});

  return c;
}

}  // namespace verify_detail

// Runs every invariant check; exceptions count as failures.
inline std::vector<CheckResult> run_verify(const VerifyOptions& opt = {}) {
  std::vector<CheckResult> out;
  for (const auto& c : verify_detail::checks()) {
    CheckResult r{c.name, false, 0.0, c.tolerance, 0.0, {}};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.worst = c.worst(opt);
      r.pass = std::isfinite(r.worst) && r.worst <= c.tolerance;
    } catch (const std::exception& e) {
      r.note = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace kcd::cli
