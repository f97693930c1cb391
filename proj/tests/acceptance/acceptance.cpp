// Acceptance run: one PASS/FAIL line per criterion, exit status = number of
// failures. Usage: kcd_acceptance <kcd binary> <configs dir> <scratch dir> [ids...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kcd/agp/solver.hpp"
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

using namespace kcd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  double worst = 0.0;  // measured error of the tightest check, in its own units
  double tol = 0.0;
  double ratio = -1.0;  // worst / tol
  std::string note;

  void check(double err, double tolerance) {
    if (!std::isfinite(err)) err = INFINITY;
    if (!(err <= tolerance)) pass = false;
    if (err / tolerance >= ratio) {
      ratio = err / tolerance;
      worst = err;
      tol = tolerance;
    }
  }
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note += (note.empty() ? "" : "; ") + what;
    }
  }
  void info(const std::string& what) { note += (note.empty() ? "" : "; ") + what; }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

ComplexMatrix dense(const OperatorExpr& op) { return to_dense(op).dense(); }

// Spectral gauge potential restricted to non-degenerate pairs:
// <m|A|n> = i <m|dH|n> / (E_n - E_m). Degenerate pairs must not be coupled.
struct SpectralAgp {
  ComplexMatrix a;
  double degenerate_coupling = 0.0;
};

SpectralAgp spectral_agp(const ComplexMatrix& h, const ComplexMatrix& dh) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const RealVector e = es.eigenvalues();
  const ComplexMatrix u = es.eigenvectors();
  const ComplexMatrix d = u.adjoint() * dh * u;
  const double gap_tol = 1e-9 * std::max(1.0, e.cwiseAbs().maxCoeff());
  SpectralAgp out{ComplexMatrix::Zero(h.rows(), h.cols()), 0.0};
  for (Eigen::Index m = 0; m < e.size(); ++m)
    for (Eigen::Index n = 0; n < e.size(); ++n) {
      if (m == n) continue;
      if (std::abs(e[n] - e[m]) < gap_tol)
        out.degenerate_coupling = std::max(out.degenerate_coupling, std::abs(d(m, n)));
      else
        out.a(m, n) = cplx{0, 1} * d(m, n) / (e[n] - e[m]);
    }
  out.a = u * out.a * u.adjoint();
  return out;
}

ComplexMatrix krylov_cd_dense(const OperatorExpr& h, const OperatorExpr& dh, const Measure& rho) {
  return dense(krylov_cd(build_krylov_chain(h, dh, rho)).cd_operator);
}

std::vector<double> random_b(int d, std::mt19937_64& rng) {
  std::vector<double> b(d);
  b[0] = 0.5 + 2.0 * unit_uniform(rng);
  for (int n = 1; n < d; ++n) b[n] = 0.2 + 2.0 * unit_uniform(rng);
  return b;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// Odd-d coefficients from the dense normal matrix K alpha = -b_1 e_1.
std::vector<double> alpha_dense_oracle(const std::vector<double>& b) {
  const int da = static_cast<int>(b.size()) / 2;
  RealMatrix k = RealMatrix::Zero(da, da);
  for (int i = 1; i <= da; ++i) {
    k(i - 1, i - 1) = b[2 * i - 1] * b[2 * i - 1] + b[2 * i] * b[2 * i];
    if (i < da) k(i - 1, i) = k(i, i - 1) = b[2 * i] * b[2 * i + 1];
  }
  RealVector rhs = RealVector::Zero(da);
  rhs[0] = -b[1];
  const RealVector a = k.fullPivLu().solve(rhs);
  return {a.data(), a.data() + a.size()};
}

// b_0^2 <0|(QTQ)^{-2}|0> from the eigen-decomposition of T.
double projector_norm_oracle(const std::vector<double>& b) {
  const int d = static_cast<int>(b.size());
  RealMatrix t = RealMatrix::Zero(d, d);
  for (int n = 1; n < d; ++n) t(n - 1, n) = t(n, n - 1) = b[n];
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(t);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double lam = es.eigenvalues()[j];
    if (std::abs(lam) > 1e-10 * scale) s += std::pow(es.eigenvectors()(0, j) / lam, 2);
  }
  return b[0] * b[0] * s;
}

// Least-squares minimizer of ||dH + i[A, H]||^2 over A = sum c_mu Y_mu via
// the normal equations.
struct LsFit {
  std::vector<double> c;
  double cost = 0.0;
};

LsFit least_squares_fit(const ComplexMatrix& h, const ComplexMatrix& dh, const std::vector<ComplexMatrix>& ys,
                        const Measure& rho) {
  const auto n = static_cast<Eigen::Index>(ys.size());
  std::vector<OperatorExpr> v;
  for (const auto& y : ys) v.emplace_back(ComplexMatrix(cplx{0, 1} * (y * h - h * y)));
  const OperatorExpr g(dh);
  RealMatrix a(n, n);
  RealVector r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = inner_product(v[i], v[j], rho).real();
    r[i] = -inner_product(v[i], g, rho).real();
  }
  const RealVector c = a.ldlt().solve(r);
  ComplexMatrix res = dh;
  for (Eigen::Index i = 0; i < n; ++i) res += c[i] * v[i].dense();
  return {{c.data(), c.data() + n}, inner_product(OperatorExpr(res), OperatorExpr(res), rho).real()};
}

XxAnnealing xx_annealing(int n_s, std::uint64_t seed) {
  return XxAnnealing{xx_random_couplings(n_s, 1.0, seed), 2.0, 4.0, 100.0};
}

// ---------------------------------------------------------------------------

Outcome two_level_closed_form() {
  Outcome o;
  std::mt19937_64 rng(101);
  auto u = [&] { return 2 * unit_uniform(rng) - 1; };
  for (int t = 0; t < 100; ++t) {
    const bool static_h = t % 4 == 3;
    Eigen::Vector3d n(u(), u(), u()), nd(u(), u(), u());
    n.normalize();
    nd -= n.dot(nd) * n;
    const double h = 0.5 + unit_uniform(rng), hd = static_h ? 0.0 : u();
    const auto c = two_level(h, n, hd, nd);
    const KrylovChain ch = build_krylov_chain(c.spec.h(c.p), c.spec.dh(c.p, c.pdot), Measure::uniform());
    o.require(ch.d() == (static_h ? 2 : 3), "draw " + std::to_string(t) + ": d = " + std::to_string(ch.d()));
    const Eigen::Vector3d cr = n.cross(nd);
    const ComplexMatrix ref = 0.5 * (cr[0] * pauli2::x() + cr[1] * pauli2::y() + cr[2] * pauli2::z());
    o.check(max_abs(dense(krylov_cd(ch).cd_operator) - ref), 1e-10);
  }
  return o;
}

Outcome oscillator_closed_form() {
  Outcome o;
  const double m = 0.7, w = 1.3, q0 = 0.2, wd = 0.9, qd = 0.4;
  const auto c = harmonic_oscillator(m, w, q0, wd, qd, 120, Measure::gibbs(1.0));
  const KrylovChain ch = build_chain_from_matrix(c.l, c.theta0, {}, c.b0);
  o.require(ch.d() == 5, "d = " + std::to_string(ch.d()));
  const double x = c.theta0[0].real(), y = c.theta0[1].real(), z = c.theta0[2].real();
  const double s = y * y + 4 * z * z, uu = y * y + 16 * z * z - s * s;
  const double ref_b[4] = {w * std::sqrt(s), w * std::sqrt(uu / s), 6 * w * std::abs(y * z) / std::sqrt(s * uu),
                           2 * w * std::abs(x) * std::sqrt(s / uu)};
  for (int k = 1; k <= 4 && k < ch.d(); ++k) o.check(std::abs(ch.b[k] - ref_b[k - 1]), 1e-8);

  // Dense reference q0' P - (omega'/4 omega)(P dQ + dQ P) in the instantaneous Fock basis.
  auto build_reference = [&](double wdot, double qdot, int cutoff) {
    ComplexMatrix a = ComplexMatrix::Zero(cutoff, cutoff);
    for (int k = 1; k < cutoff; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    const ComplexMatrix ad = a.adjoint();
    const ComplexMatrix dq = (a + ad) / std::sqrt(2 * m * w);
    const ComplexMatrix p = cplx{0, 1} * std::sqrt(m * w / 2) * (ad - a);
    return ComplexMatrix(qdot * p - wdot / (4 * w) * (p * dq + dq * p));
  };
  struct Case {
    double wd, qd;
    int d;
  };
  for (auto [cwd, cqd, cd] : {Case{wd, qd, 5}, Case{wd, 0.0, 3}, Case{0.0, qd, 2}}) {
    const auto oc = harmonic_oscillator(m, w, q0, cwd, cqd, 120, Measure::gibbs(1.0));
    const KrylovChain cc = build_chain_from_matrix(oc.l, oc.theta0, {}, oc.b0);
    o.require(cc.d() == cd, "case (" + fmt(cwd) + ", " + fmt(cqd) + "): d = " + std::to_string(cc.d()));
    const ComplexMatrix got = oc.basis->expand(krylov_cd(cc).cd_operator.structured().coords).dense();
    // Weighted distance: truncation artefacts at the cutoff carry no Gibbs weight.
    o.check(operator_norm(OperatorExpr(ComplexMatrix(got - build_reference(cwd, cqd, 120))), oc.measure), 1e-8);
  }
  return o;
}

Outcome stirap_angles() {
  Outcome o;
  const auto proto = stirap_protocol();
  const cplx i{0, 1};
  ComplexMatrix y1 = ComplexMatrix::Zero(3, 3), y2 = y1, y3 = y1;
  y1(0, 1) = -i, y1(1, 0) = i;
  y2(1, 2) = -i, y2(2, 1) = i;
  y3(0, 2) = -i, y3(2, 0) = i;
  for (int j = 0; j < 50; ++j) {
    const double t = proto.t_f * (0.2 + 0.6 * j / 49.0);
    const Params p = proto.lambda(t), pd = proto.lambda_dot(t);
    const double dl = param(p, "delta"), wp = param(p, "wp"), ws = param(p, "ws");
    const double dld = param(pd, "delta"), wpd = param(pd, "wp"), wsd = param(pd, "ws");
    const auto c = stirap(dl, wp, ws, dld, wpd, wsd);
    const KrylovChain ch = build_chain_from_matrix(c.l, c.theta0, {}, c.b0);
    o.require(ch.d() == 7, "t = " + fmt(t) + ": d = " + std::to_string(ch.d()));
    // tan(theta) = wp/ws, tan(2 phi) = Omega/delta.
    const double om = std::hypot(wp, ws), omd = (wp * wpd + ws * wsd) / om;
    const double theta = std::atan2(wp, ws), theta_d = (wpd * ws - wp * wsd) / (om * om);
    const double phi_d = 0.5 * (omd * dl - om * dld) / (dl * dl + om * om);
    const ComplexMatrix ref = -phi_d * std::sin(theta) * y1 + phi_d * std::cos(theta) * y2 - theta_d * y3;
    o.check(max_abs(c.basis->expand(krylov_cd(ch).cd_operator.structured().coords).dense() - ref), 1e-8);
  }
  return o;
}

// Closed-form alpha from the eigenvectors of the free-fermion normal matrix.
std::vector<double> tfim_alpha_oracle(int n_s, double v, double g) {
  const int da = n_s - 1;
  std::vector<double> a(da);
  for (int k = 1; k <= da; ++k) {
    double s = 0.0;
    for (int l = 1; l <= da; ++l) {
      const double q = std::numbers::pi * l / n_s;
      const double lam = 4 * v * v * (1 + g * g - 2 * g * std::cos(q));
      s += std::sin(k * q) * std::sin(q) / lam;
    }
    a[k - 1] = (k % 2 == 1 ? -1.0 : 1.0) * std::sqrt(2.0) * v * (2.0 / n_s) * s;
  }
  return a;
}

void tfim_sum_rules(Outcome& o, const std::vector<double>& b, int n_s, double v, double g, double gd) {
  o.require(static_cast<int>(b.size()) == 2 * n_s - 1, "n_s " + std::to_string(n_s) + ": d = " + std::to_string(b.size()));
  o.check(std::abs(b[0] - std::abs(v * gd) / 2), 1e-9);
  o.check(std::abs(b[1] - std::sqrt(2.0) * v), 1e-9);
  for (std::size_t k = 1; 2 * k < b.size(); ++k)
    o.check(std::abs(b[2 * k - 1] * b[2 * k - 1] + b[2 * k] * b[2 * k] - 4 * v * v * (1 + g * g)), 1e-9);
  for (std::size_t k = 1; 2 * k + 1 < b.size(); ++k) o.check(std::abs(b[2 * k] * b[2 * k + 1] - 4 * v * v * g), 1e-9);
  o.check(max_diff(solve_alpha(b), tfim_alpha_oracle(n_s, v, g)), 1e-9);
}

Outcome tfim_chains() {
  Outcome o;
  const double v = 1.0, gd = 0.3;
  double pauli_12 = 0.0;
  for (int n_s : {4, 6, 8, 10, 12})
    for (double g : {0.4, 1.7}) {
      const auto t0 = std::chrono::steady_clock::now();
      const ModelSpec m = tfim_spec(n_s, v);
      const KrylovChain ch = build_krylov_chain(m.h({{"g", g}}), m.dh({{"g", g}}, {{"g", gd}}), m.measure);
      if (n_s == 12) pauli_12 += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      tfim_sum_rules(o, ch.b, n_s, v, g, gd);
    }
  o.require(pauli_12 < 60.0, "Pauli n_s = 12 took " + fmt(pauli_12) + " s");
  const auto t0 = std::chrono::steady_clock::now();
  for (double g : {0.5, 1.5}) tfim_sum_rules(o, tfim_analytic_b(200, v, g, gd), 200, v, g, gd);
  const double fast = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(fast < 1.0, "analytic n_s = 200 took " + fmt(fast) + " s");
  o.info("pauli n_s=12 " + fmt(pauli_12) + " s, analytic n_s=200 " + fmt(fast) + " s");
  return o;
}

void spectral_check(Outcome& o, const ModelSpec& m, const DrivingProtocol& proto, double lo, double hi,
                    const Measure& rho) {
  for (int j = 0; j < 20; ++j) {
    const double t = proto.t_f * (lo + (hi - lo) * j / 19.0);
    const Params p = proto.lambda(t), pd = proto.lambda_dot(t);
    const OperatorExpr h = m.h(p), dh = m.dh(p, pd);
    const SpectralAgp ref = spectral_agp(dense(h), dense(dh));
    o.check(ref.degenerate_coupling, 1e-9);
    const ComplexMatrix cd = krylov_cd_dense(h, dh, rho);
    o.check(max_abs(cd - ref.a) / std::max(1.0, max_abs(ref.a)), 1e-8);
  }
}

Outcome spectral_equivalence() {
  Outcome o;
  spectral_check(o, two_level_spec(), two_level_sweep(1.0, 5.0), 0.02, 0.98, Measure::uniform());
  spectral_check(o, stirap_spec(), stirap_protocol(), 0.2, 0.8, stirap_measure());
  for (int n_s : {4, 6}) {
    const ModelSpec m = tfim_spec(n_s, 1.0);
    spectral_check(o, m, linear_ramp("g", 0.05, 1.95, 10.0), 0.0, 1.0, m.measure);
  }
  for (int n_s : {4, 6}) spectral_check(o, xx_spec(n_s), xx_annealing(n_s, 7).protocol(), 0.05, 0.95, Measure::uniform());
  return o;
}

void measure_check(Outcome& o, const ModelSpec& m, const DrivingProtocol& proto, std::vector<double> fractions) {
  for (double s : fractions) {
    const Params p = proto.lambda(s * proto.t_f), pd = proto.lambda_dot(s * proto.t_f);
    const OperatorExpr h(dense(m.h(p))), dh(dense(m.dh(p, pd)));
    const ComplexMatrix a = krylov_cd_dense(h, dh, Measure::uniform());
    const ComplexMatrix b = krylov_cd_dense(h, dh, Measure::gibbs(1.0));
    o.check(max_abs(a - b) / std::max(1.0, max_abs(a)), 1e-8);
  }
}

Outcome measure_independence() {
  Outcome o;
  measure_check(o, two_level_spec(), two_level_sweep(1.0, 5.0), {0.1, 0.35, 0.6, 0.85});
  measure_check(o, stirap_spec(), stirap_protocol(), {0.3, 0.45, 0.55, 0.7});
  measure_check(o, tfim_spec(6, 1.0), linear_ramp("g", 0.05, 1.95, 10.0), {0.1, 0.5, 0.9});
  measure_check(o, xx_spec(4), xx_annealing(4, 7).protocol(), {0.2, 0.5, 0.8});
  // The oscillator CD is measure independent; the weight of its first chain term is not.
  const auto c1 = harmonic_oscillator(0.7, 1.3, 0.2, 0.9, 0.4, 120, Measure::gibbs(1.0));
  const auto c2 = harmonic_oscillator(0.7, 1.3, 0.2, 0.9, 0.4, 120, Measure::gibbs(2.0));
  double r[2];
  int i = 0;
  for (const auto* c : {&c1, &c2}) {
    const KrylovChain ch = build_chain_from_matrix(c->l, c->theta0, {}, c->b0);
    const AgpExpansion e = krylov_cd(ch);
    const ComplexVector coords = e.cd_operator.structured().coords;
    // Full CD in Y1/Y2 coordinates; reference weights are the raw norms.
    o.check(std::abs(coords[3].real() - 0.4 * std::sqrt(0.7 * 1.3 / 2) * c->raw_norms[3]), 1e-8);
    o.check(std::abs(coords[4].real() + 0.9 / (4 * 1.3) * c->raw_norms[4]), 1e-8);
    const ComplexVector first = cplx{0, e.b0 * e.alpha[0]} * ch.basis[1].structured().coords;
    r[i++] = first[3].real() / coords[3].real();
  }
  o.require(std::abs(r[0] - r[1]) > 1e-3, "oscillator first-term weight r barely moves: " + fmt(r[0]) + " vs " + fmt(r[1]));
  o.info("r(beta=1) = " + fmt(r[0]) + ", r(beta=2) = " + fmt(r[1]));
  return o;
}

void route_check(Outcome& o, const std::vector<double>& b) {
  const auto tri = solve_alpha_odd_tridiagonal(b);
  const auto zm = solve_alpha_odd_zero_mode(b).alpha;
  const auto lap = alpha_via_laplace(BMatrix{b});
  const auto ref = alpha_dense_oracle(b);
  const double scale = std::max(1e-300, max_abs(ref));
  o.check(max_diff(tri, ref) / scale, 1e-9);
  o.check(max_diff(zm, ref) / scale, 1e-9);
  o.check(max_diff(lap, ref) / scale, 1e-9);
  double s = 0.0;
  for (double a : tri) s += a * a;
  const double value = b[0] * b[0] * s;
  o.check(std::abs(value - projector_norm_oracle(b)) / value, 1e-9);
}

Outcome odd_routes() {
  Outcome o;
  std::mt19937_64 rng(707);
  for (int t = 0; t < 1000; ++t) route_check(o, random_b(2 * static_cast<int>(rng() % 20) + 3, rng));
  // Odd chains of the models.
  const auto tl = two_level(1.3, {0.3, -0.2, 0.9}, 0.4, {0.5, 0.7, -0.1});
  route_check(o, build_krylov_chain(tl.spec.h(tl.p), tl.spec.dh(tl.p, tl.pdot), Measure::uniform()).b);
  const auto osc = harmonic_oscillator(0.7, 1.3, 0.2, 0.9, 0.4);
  route_check(o, build_chain_from_matrix(osc.l, osc.theta0, {}, osc.b0).b);
  const auto proto = stirap_protocol();
  const Params p = proto.lambda(37.0), pd = proto.lambda_dot(37.0);
  const auto sc = stirap(param(p, "delta"), param(p, "wp"), param(p, "ws"), 0.0, param(pd, "wp"), param(pd, "ws"));
  route_check(o, build_chain_from_matrix(sc.l, sc.theta0, {}, sc.b0).b);
  for (int n_s : {4, 8, 12}) {
    const ModelSpec m = tfim_spec(n_s, 1.0);
    route_check(o, build_krylov_chain(m.h({{"g", 0.6}}), m.dh({{"g", 0.6}}, {{"g", 1.0}}), m.measure).b);
  }
  route_check(o, tfim_analytic_b(200, 1.0, 0.7, 1.0));
  // XX through its quadratic-operator chain; the generic routes lose this
  // long, nearly degenerate chain to roundoff.
  const auto xa = xx_annealing(6, 7);
  const XxLayout xl(6);
  const ComplexVector xth = xx_derivative_coordinates(xl, xa.derivative(40.0));
  const KrylovChain xc = build_chain_from_matrix(xx_liouvillian(xl, xa.fields(40.0)), xth / xth.norm(), {}, xth.norm());
  if (xc.d() % 2 == 1) route_check(o, xc.b);
  else o.require(false, "XX chain unexpectedly even");
  const ModelSpec im = ising_longitudinal_spec(6, 1.0, 1.0, 1.0);
  const auto ys = ising_ops::restricted_y(6);
  const TruncatedCd ic = truncated_cd(im.h({{"g", 0.4}}), im.dh({{"g", 0.4}}, {{"g", 1.0}}),
                                      std::vector<OperatorExpr>(ys.begin(), ys.end()), im.measure);
  if (ic.chain.d() % 2 == 1) route_check(o, ic.chain.b);
  return o;
}

void variational_check(Outcome& o, const OperatorExpr& h, const OperatorExpr& dh, const std::vector<OperatorExpr>& basis,
                       const Measure& rho) {
  const TruncatedCd t = truncated_cd(h, dh, basis, rho);
  std::vector<ComplexMatrix> ys;
  for (const auto& y : basis) ys.push_back(dense(y));
  const LsFit ls = least_squares_fit(dense(h), dense(dh), ys, rho);
  o.check(max_diff(t.coefficients, ls.c), 1e-8);
  o.check(std::abs(variational_cost(h, dh, t.cd_operator, rho) - ls.cost), 1e-8);
}

Outcome variational_equivalence() {
  Outcome o;
  for (double hv : {1.0, 0.1}) {
    const ModelSpec m = ising_longitudinal_spec(6, 1.0, hv, 1.0);
    const auto ys = ising_ops::restricted_y(6);
    for (double g : {0.1, 0.4, 0.7, 0.95}) {
      const OperatorExpr h = m.h({{"g", g}}), dh = m.dh({{"g", g}}, {{"g", 1.0}});
      for (std::size_t size = 1; size <= ys.size(); ++size)
        variational_check(o, h, dh, {ys.begin(), ys.begin() + size}, m.measure);
    }
  }
  std::mt19937_64 rng(808);
  const int n_s = 6;
  const XxLayout lay(n_s, true);
  const auto& els = lay.basis()->elements();
  const ModelSpec m = xx_spec(n_s);
  for (int trial = 0; trial < 10; ++trial) {
    XxFields f, df;
    for (int i = 1; i < n_s; ++i) f.v.push_back(2 * unit_uniform(rng) - 1), df.v.push_back(2 * unit_uniform(rng) - 1);
    for (int i = 1; i <= n_s; ++i) f.h.push_back(2 * unit_uniform(rng) - 1), df.h.push_back(2 * unit_uniform(rng) - 1);
    std::vector<OperatorExpr> basis;
    for (int c = 0; c < lay.y_size(); ++c)
      if (unit_uniform(rng) < 0.4) basis.push_back(els[lay.x_size() + c]);
    if (basis.empty()) basis.push_back(els[lay.x_size()]);
    variational_check(o, m.h(xx_params(f)), m.dh(xx_params(f), xx_params(df)), basis, Measure::uniform());
  }
  return o;
}

Outcome fidelity_physics() {
  Outcome o;
  const int n = 6;
  std::vector<double> t_fs;
  for (int i = 0; i < 10; ++i) t_fs.push_back(std::pow(100.0, i / 9.0));
  std::vector<double> f_trunc[2];
  double worst_violation[2] = {0.0, 0.0}, worst_exact = 0.0;
  const double hvs[2] = {1.0, 0.1};
  for (int k = 0; k < 2; ++k) {
    const ModelSpec m = ising_longitudinal_spec(n, 1.0, hvs[k], 1.0);
    const auto y = ising_ops::restricted_y(n);
    const std::vector<OperatorExpr> basis(y.begin(), y.end());
    for (double t_f : t_fs) {
      const auto proto = linear_ramp("g", 0.0, 1.0, t_f);
      const auto grid = uniform_grid(0.0, t_f, 4);
      const ComplexVector psi0 = eigenstate(m, proto.lambda(0.0));
      const double f0 = evolve(m, proto, CdSource::none(), psi0, grid).final_fidelity();
      const double f1 = evolve(m, proto, CdSource::truncated(basis), psi0, grid).final_fidelity();
      const double fx = evolve(m, proto, CdSource::tracked(0), psi0, grid).final_fidelity();
      f_trunc[k].push_back(f1);
      worst_violation[k] = std::max(worst_violation[k], f0 - f1);
      worst_exact = std::max(worst_exact, 1.0 - fx);
    }
  }
  // h/v = 1 is the well-gapped case the improvement claim is made for.
  o.check(std::max(0.0, worst_violation[0]), 1e-6);
  o.check(worst_exact, 1e-6);
  for (std::size_t i = 0; i < t_fs.size(); ++i)
    o.require(f_trunc[0][i] > f_trunc[1][i], "t_f = " + fmt(t_fs[i]) + ": f(h=1) <= f(h=0.1)");
  o.info("h/v=0.1 max f_without - f_with = " + fmt(worst_violation[1]) + " (informational)");
  return o;
}

Outcome toda_flow() {
  Outcome o;
  const int n_s = 6;
  const TodaSpecial toda(n_s, 1.0, 0.3);
  const XxLayout lay(n_s, true);
  for (double t : {0.0, 0.8, 2.5}) {
    const XxFields f = toda.fields(t), df = toda.derivative(t);
    const ComplexVector th = xx_derivative_coordinates(lay, df);
    const KrylovChain ch = build_chain_from_matrix(xx_liouvillian(lay, f), th / th.norm(), {}, th.norm());
    o.require(ch.d() == 2, "t = " + fmt(t) + ": d = " + std::to_string(ch.d()));
    const AgpExpansion e = krylov_cd(ch);
    PauliSum ref(n_s);
    for (int k = 1; k < n_s; ++k) ref.axpy(f.v[k - 1] / std::sqrt(2.0), xx_ops::w(n_s, k, 1));
    const ComplexMatrix got = dense(lay.basis()->expand(e.cd_operator.structured().coords));
    o.check(max_abs(got - ref.to_dense()), 1e-9);
    const auto q = norm_fraction(e, ch, BodyRule::Declared);
    for (std::size_t p = 0; p < q.size(); ++p) o.check(std::abs(q[p] - (p == 2 ? 1.0 : 0.0)), 1e-9);
  }
  // Generic flow: one-magnon block of the many-body Hamiltonian before and after.
  const int n = 8;
  std::mt19937_64 rng(909);
  XxFields f;
  for (int i = 1; i < n; ++i) f.v.push_back(0.5 + 0.5 * unit_uniform(rng));
  for (int i = 1; i <= n; ++i) f.h.push_back(2 * unit_uniform(rng) - 1);
  auto one_magnon = [n](const XxFields& g) {
    const ComplexMatrix h = xx_hamiltonian(g).to_dense();
    ComplexMatrix blk(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) blk(a, b) = h(1 << a, 1 << b);
    return RealVector(Eigen::SelfAdjointEigenSolver<ComplexMatrix>(blk).eigenvalues());
  };
  const double v0 = *std::max_element(f.v.begin(), f.v.end());
  const RealVector e0 = one_magnon(f);
  const XxFields g = toda_integrate(f, 50.0 / v0, 20000);
  o.check((one_magnon(g) - e0).cwiseAbs().maxCoeff(), 1e-7);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every CSV has the provenance header, a column row and at least one data row
// of matching width with finite numbers.
std::string csv_problem(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# config_hash=", 0) != 0) return "missing header";
  if (!std::getline(in, line) || line.empty()) return "missing column row";
  const auto width = std::count(line.begin(), line.end(), ',');
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (std::count(line.begin(), line.end(), ',') != width) return "ragged row " + std::to_string(rows);
    if (line.find("nan") != std::string::npos || line.find("inf") != std::string::npos) return "non-finite value";
  }
  return rows > 0 ? "" : "no data rows";
}

Outcome figure_regeneration(const std::string& kcd, const fs::path& configs, const fs::path& scratch) {
  Outcome o;
  struct Job {
    const char* config;
    const char* command;
  };
  const std::vector<Job> jobs{{"fig02", "agp"},          {"fig04", "agp"},         {"fig05", "agp"},
                              {"fig08_uniform", "agp"},  {"fig08_random", "agp"},  {"fig09", "lanczos"},
                              {"fig10_uniform", "agp"},  {"fig10_random", "agp"},  {"fig11_uniform", "agp"},
                              {"fig11_random", "agp"}};
  fs::remove_all(scratch);
  int files = 0;
  for (const auto& j : jobs) {
    for (const char* run : {"a", "b"}) {
      const fs::path out = scratch / run;
      fs::create_directories(out);
      const std::string cmd = "\"" + kcd + "\" " + j.command + " --config \"" + (configs / (std::string(j.config) + ".ini")).string() +
                              "\" --out \"" + out.string() + "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) o.require(false, std::string(j.config) + " run " + run + " failed");
    }
  }
  for (const auto& entry : fs::directory_iterator(scratch / "a")) {
    const fs::path a = entry.path(), b = scratch / "b" / a.filename();
    const std::string ta = slurp(a);
    ++files;
    o.require(fs::exists(b) && ta == slurp(b), a.filename().string() + " differs between reruns");
    if (a.extension() == ".csv") {
      const std::string problem = csv_problem(ta);
      o.require(problem.empty(), a.filename().string() + ": " + problem);
    }
  }
  o.require(files > static_cast<int>(jobs.size()), "only " + std::to_string(files) + " files written");
  o.info(std::to_string(files) + " files compared");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::fprintf(stderr, "usage: %s <kcd binary> <configs dir> <scratch dir> [criterion ids...]\n", argv[0]);
    return 2;
  }
  const std::string kcd = argv[1];
  const fs::path configs = argv[2], scratch = argv[3];

  const std::vector<Criterion> criteria{
      {1, "two-level closed form", 1.0, two_level_closed_form},
      {2, "oscillator chain and case table", 5.0, oscillator_closed_form},
      {3, "STIRAP angle formula", 5.0, stirap_angles},
      {4, "TFIM sum rules and alpha", 60.0, tfim_chains},
      {5, "spectral-oracle equivalence", 120.0, spectral_equivalence},
      {6, "measure independence", 60.0, measure_independence},
      {7, "odd-d route consistency", 30.0, odd_routes},
      {8, "variational equivalence", 60.0, variational_equivalence},
      {9, "fidelity physics", 600.0, fidelity_physics},
      {10, "Toda flow", 30.0, toda_flow},
      {11, "figure-data regeneration", 900.0, [&] { return figure_regeneration(kcd, configs, scratch); }},
  };

  std::vector<int> only;
  for (int i = 4; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) o.require(false, "over time budget");
    failures += !o.pass;
    std::printf("%s  %2d  %-34s worst %-9s tol %-7s %7.2f s / %g s%s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                fmt(o.worst).c_str(), fmt(o.tol).c_str(), secs, c.budget_s, o.note.empty() ? "" : "  ",
                o.note.c_str());
    std::fflush(stdout);
  }
  return failures;
}
