#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kcd/dynamics/cd_source.hpp"

namespace kcd {

// |<phi|psi>|^2 for normalized states of equal dimension.
inline double fidelity(const ComplexVector& psi, const ComplexVector& phi, double norm_tol = 1e-6) {
  require(psi.size() == phi.size(), ErrorKind::LengthMismatch, "states of different dimension");
  require(std::abs(psi.norm() - 1.0) <= norm_tol && std::abs(phi.norm() - 1.0) <= norm_tol,
          ErrorKind::NotNormalized, "fidelity needs normalized states");
  return std::min(1.0, std::norm(phi.dot(psi)));
}

// Eigenvector of H(p) for the given level (ascending energies), with its
// largest-magnitude component made real positive.
inline ComplexVector eigenstate(const ModelSpec& m, const Params& p, int level = 0) {
  const Spectrum s = Spectrum::of(to_dense(m.h(p)).dense());
  require(level >= 0 && level < s.energies.size(), ErrorKind::InvalidArgument, "level out of range");
  ComplexVector v = s.vectors.col(level);
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  return v * (std::abs(v[k]) / v[k]);
}

struct EvolveOptions {
  int initial_steps = 256;     // total RK4 steps of the coarsest attempt
  double refine_tol = 1e-8;    // accepted when halving the step moves f(t_f) by less
  int max_doublings = 14;
  int target_level = 0;        // fidelity is measured against this level of H(t)
  bool record_spectra = false;
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<ComplexVector> states;
  std::vector<double> fidelity;
  std::vector<RealVector> spectra;
  int steps = 0;                  // total steps of the accepted run
  double refinement_delta = 0.0;  // |f(t_f)| change against the half-as-fine run
  double max_norm_error = 0.0;

  double final_fidelity() const { return fidelity.empty() ? 0.0 : fidelity.back(); }
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  require(grid.size() >= 2, ErrorKind::InvalidArgument, "time grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i] > grid[i - 1], ErrorKind::InvalidArgument, "time grid must be strictly increasing");
}

// Steps per grid interval for a run of `total` steps over the whole grid.
inline std::vector<int> interval_steps(const std::vector<double>& grid, int total) {
  const double span = grid.back() - grid.front();
  std::vector<int> n(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    n[i] = std::max(1, static_cast<int>(std::ceil(total * (grid[i + 1] - grid[i]) / span - 1e-9)));
  return n;
}

struct Generator {
  const ModelSpec& model;
  const DrivingProtocol& protocol;
  const CdSource& cd;

  ComplexMatrix operator()(double t) const {
    const Params p = protocol.lambda(t);
    const OperatorExpr h = model.h(p);
    ComplexMatrix k = to_dense(h).dense();
    if (cd.kind != CdKind::None)
      k += cd_operator_dense(h, model.dh(p, protocol.lambda_dot(t)), cd.measure.value_or(model.measure), cd);
    return k;
  }
};

inline double target_overlap(const ComplexMatrix& h, const ComplexVector& psi, int level, RealVector* spectrum) {
  const Spectrum s = Spectrum::of(h);
  if (spectrum) *spectrum = s.energies;
  return std::norm(s.vectors.col(level).dot(psi) / psi.norm());
}

inline EvolutionResult integrate(const Generator& gen, const ComplexVector& psi0, const std::vector<double>& grid,
                                 int total, const EvolveOptions& opt) {
  EvolutionResult r;
  const auto counts = interval_steps(grid, total);
  ComplexVector psi = psi0;
  auto record = [&](double t) {
    r.times.push_back(t);
    r.states.push_back(psi);
    RealVector spec;
    const ComplexMatrix h = to_dense(gen.model.h(gen.protocol.lambda(t))).dense();
    r.fidelity.push_back(target_overlap(h, psi, opt.target_level, opt.record_spectra ? &spec : nullptr));
    if (opt.record_spectra) r.spectra.push_back(std::move(spec));
    r.max_norm_error = std::max(r.max_norm_error, std::abs(psi.norm() - 1.0));
  };
  record(grid.front());
  const cplx mi{0.0, -1.0};
  ComplexMatrix k_start = gen(grid.front());
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = (grid[i + 1] - grid[i]) / counts[i];
    for (int s = 0; s < counts[i]; ++s) {
      const double t = grid[i] + s * h;
      const ComplexMatrix k_mid = gen(t + 0.5 * h);
      // Land exactly on the grid point at the end of each interval.
      const ComplexMatrix k_end = gen(s + 1 == counts[i] ? grid[i + 1] : t + h);
      const ComplexVector k1 = mi * (k_start * psi);
      const ComplexVector k2 = mi * (k_mid * (psi + 0.5 * h * k1));
      const ComplexVector k3 = mi * (k_mid * (psi + 0.5 * h * k2));
      const ComplexVector k4 = mi * (k_end * (psi + h * k3));
      psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      k_start = k_end;
      r.steps += 1;
    }
    record(grid[i + 1]);
  }
  return r;
}

}  // namespace detail

// i d/dt psi = (H(t) + H_CD(t)) psi with classical RK4 at a fixed step. The
// step count doubles until halving the step changes the final fidelity by
// less than refine_tol; the finer of the last two runs is returned.
inline EvolutionResult evolve(const ModelSpec& model, const DrivingProtocol& protocol, const CdSource& cd,
                              const ComplexVector& psi0, const std::vector<double>& grid,
                              const EvolveOptions& opt = {}) {
  detail::check_grid(grid);
  require(std::abs(psi0.norm() - 1.0) <= 1e-12, ErrorKind::NotNormalized,
          "initial state norm is " + std::to_string(psi0.norm()));
  require(opt.initial_steps >= 1, ErrorKind::InvalidArgument, "initial step count must be positive");
  const detail::Generator gen{model, protocol, cd};
  int steps = std::max(opt.initial_steps, static_cast<int>(grid.size()) - 1);
  EvolutionResult coarse = detail::integrate(gen, psi0, grid, steps, opt);
  for (int k = 0; k < opt.max_doublings; ++k) {
    steps *= 2;
    EvolutionResult fine = detail::integrate(gen, psi0, grid, steps, opt);
    fine.refinement_delta = std::abs(fine.final_fidelity() - coarse.final_fidelity());
    if (fine.refinement_delta < opt.refine_tol) return fine;
    coarse = std::move(fine);
  }
  throw Error(ErrorKind::StepRefinementFailure,
              "final fidelity not converged after " + std::to_string(steps) + " steps (last change " +
                  std::to_string(coarse.refinement_delta) + ")");
}

inline std::vector<double> uniform_grid(double t0, double t1, int intervals) {
  require(intervals >= 1 && t1 > t0, ErrorKind::InvalidArgument, "bad grid");
  std::vector<double> g(intervals + 1);
  for (int i = 0; i <= intervals; ++i) g[i] = t0 + (t1 - t0) * i / intervals;
  g.back() = t1;
  return g;
}

struct AdiabaticReference {
  std::vector<double> times;
  std::vector<ComplexVector> states;
  std::vector<double> energies;
  std::vector<int> level;  // index of the tracked level at each grid point
};

struct AdiabaticOptions {
  int substeps = 64;       // tracking points per grid interval
  double gap_tol = 1e-10;  // relative to max |e|
};

// Adiabatic trajectory e^{-i int e_n} |n(t)> in the discrete parallel-transport
// gauge: each eigenvector is phase-aligned with its predecessor, and the
// level is followed by maximal overlap rather than by energy order.
inline AdiabaticReference adiabatic_reference(const ModelSpec& model, const DrivingProtocol& protocol, int level,
                                              const std::vector<double>& grid, const AdiabaticOptions& opt = {}) {
  detail::check_grid(grid);
  require(opt.substeps >= 1, ErrorKind::InvalidArgument, "substeps must be positive");
  AdiabaticReference out;
  ComplexVector prev;
  double phase = 0.0, e_prev = 0.0, t_prev = grid.front();
  Eigen::Index idx = level;
  auto visit = [&](double t, bool keep) {
    const Spectrum s = Spectrum::of(to_dense(model.h(protocol.lambda(t))).dense());
    const auto& e = s.energies;
    if (prev.size() == 0) {
      require(level >= 0 && level < e.size(), ErrorKind::InvalidArgument, "level out of range");
      prev = s.vectors.col(level);
      Eigen::Index k = 0;
      prev.cwiseAbs().maxCoeff(&k);
      prev *= std::abs(prev[k]) / prev[k];
    } else {
      (s.vectors.adjoint() * prev).cwiseAbs().maxCoeff(&idx);
      ComplexVector v = s.vectors.col(idx);
      const cplx ov = v.dot(prev);  // <v|prev>
      prev = v * (ov / std::abs(ov));
    }
    const double scale = std::max(e.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index m = 0; m < e.size(); ++m)
      if (m != idx)
        require(std::abs(e[m] - e[idx]) > opt.gap_tol * scale, ErrorKind::LevelCrossing,
                "tracked level meets level " + std::to_string(m) + " at t = " + std::to_string(t));
    // Trapezoidal dynamical phase.
    if (!out.times.empty()) phase += 0.5 * (t - t_prev) * (e[idx] + e_prev);
    e_prev = e[idx];
    t_prev = t;
    if (keep) {
      out.times.push_back(t);
      out.states.push_back(std::exp(cplx{0.0, -phase}) * prev);
      out.energies.push_back(e[idx]);
      out.level.push_back(static_cast<int>(idx));
    }
  };
  visit(grid.front(), true);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    for (int s = 1; s <= opt.substeps; ++s)
      visit(s == opt.substeps ? grid[i + 1] : grid[i] + (grid[i + 1] - grid[i]) * s / opt.substeps,
            s == opt.substeps);
  return out;
}

}  // namespace kcd
