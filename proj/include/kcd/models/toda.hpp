#pragma once

#include <cmath>
#include <numbers>

#include "kcd/models/xx.hpp"

namespace kcd {

// Toda flow of the XX fields: hdot_n = 2 (v_n^2 - v_{n-1}^2),
// vdot_n = v_n (h_{n+1} - h_n), with v_0 = v_{n_s} = 0.
inline XxFields toda_rhs(const XxFields& f) {
  check_fields(f);
  const int n_s = f.sites();
  XxFields d{std::vector<double>(n_s - 1), std::vector<double>(n_s)};
  for (int n = 1; n <= n_s; ++n) {
    const double vn = n < n_s ? f.v[n - 1] : 0.0;
    const double vp = n > 1 ? f.v[n - 2] : 0.0;
    d.h[n - 1] = 2 * (vn * vn - vp * vp);
  }
  for (int n = 1; n < n_s; ++n) d.v[n - 1] = f.v[n - 1] * (f.h[n] - f.h[n - 1]);
  return d;
}

// Classical RK4 on the Toda equations with a fixed number of steps.
inline XxFields toda_integrate(XxFields f, double t_f, int steps) {
  require(steps > 0, ErrorKind::InvalidArgument, "step count must be positive");
  const double dt = t_f / steps;
  auto axpy = [](const XxFields& a, double s, const XxFields& b) {
    XxFields r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += s * b.v[i];
    for (std::size_t i = 0; i < r.h.size(); ++i) r.h[i] += s * b.h[i];
    return r;
  };
  for (int s = 0; s < steps; ++s) {
    const XxFields k1 = toda_rhs(f);
    const XxFields k2 = toda_rhs(axpy(f, dt / 2, k1));
    const XxFields k3 = toda_rhs(axpy(f, dt / 2, k2));
    const XxFields k4 = toda_rhs(axpy(f, dt, k3));
    for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] += dt / 6 * (k1.v[i] + 2 * k2.v[i] + 2 * k3.v[i] + k4.v[i]);
    for (std::size_t i = 0; i < f.h.size(); ++i) f.h[i] += dt / 6 * (k1.h[i] + 2 * k2.h[i] + 2 * k3.h[i] + k4.h[i]);
  }
  return f;
}

// Special solution with equidistant fields and parabolic couplings:
// h_n = -c (n - (n_s+1)/2) sin(theta), v_n = sqrt(n (n_s - n))/(n_s - 1) h_1 cos(theta),
// c = 2 h_1/(n_s - 1), and theta' = c cos(theta), i.e.
// theta(t) = atan(sinh(c t + asinh(tan theta_0))).
class TodaSpecial {
 public:
  TodaSpecial(int n_s, double h1, double theta0) : n_s_(n_s), h1_(h1), theta0_(theta0) {
    require(n_s >= 2, ErrorKind::InvalidArgument, "Toda chain needs at least two sites");
    require(std::abs(theta0) < std::numbers::pi / 2, ErrorKind::InvalidArgument,
            "theta_0 must lie in (-pi/2, pi/2)");
  }

  int sites() const noexcept { return n_s_; }
  double rate() const noexcept { return 2 * h1_ / (n_s_ - 1); }

  double theta(double t) const {
    const double th = std::atan(std::sinh(rate() * t + std::asinh(std::tan(theta0_))));
    require(std::abs(th) < std::numbers::pi / 2, ErrorKind::InvalidArgument,
            "theta left (-pi/2, pi/2) at t = " + std::to_string(t));
    return th;
  }
  double theta_dot(double t) const { return rate() * std::cos(theta(t)); }

  XxFields fields(double t) const { return fields_at(theta(t)); }

  XxFields derivative(double t) const {
    const double th = theta(t), thd = theta_dot(t);
    XxFields d{std::vector<double>(n_s_ - 1), std::vector<double>(n_s_)};
    for (int n = 1; n <= n_s_; ++n) d.h[n - 1] = -rate() * (n - (n_s_ + 1) / 2.0) * std::cos(th) * thd;
    for (int n = 1; n < n_s_; ++n)
      d.v[n - 1] = -std::sqrt(static_cast<double>(n) * (n_s_ - n)) / (n_s_ - 1) * h1_ * std::sin(th) * thd;
    return d;
  }

  XxFields fields_at(double th) const {
    XxFields f{std::vector<double>(n_s_ - 1), std::vector<double>(n_s_)};
    for (int n = 1; n <= n_s_; ++n) f.h[n - 1] = -rate() * (n - (n_s_ + 1) / 2.0) * std::sin(th);
    for (int n = 1; n < n_s_; ++n)
      f.v[n - 1] = std::sqrt(static_cast<double>(n) * (n_s_ - n)) / (n_s_ - 1) * h1_ * std::cos(th);
    return f;
  }

  DrivingProtocol protocol(double t_f) const {
    DrivingProtocol d;
    d.name = "toda_special";
    d.t_f = t_f;
    const TodaSpecial self = *this;
    d.lambda = [self](double t) { return xx_params(self.fields(t)); };
    d.lambda_dot = [self](double t) { return xx_params(self.derivative(t)); };
    return d;
  }

 private:
  int n_s_;
  double h1_;
  double theta0_;
};

// Expected CD term along any Toda flow, (1/sqrt2) sum_n v_n W_n^1, as
// coordinates on the XX layout.
inline ComplexVector toda_reference_cd(const XxLayout& lay, const XxFields& f) {
  ComplexVector c = ComplexVector::Zero(lay.size());
  for (int n = 1; n < lay.sites(); ++n) c[lay.w_index(n, 1)] = f.v[n - 1] / std::sqrt(2.0);
  return c;
}

}  // namespace kcd
