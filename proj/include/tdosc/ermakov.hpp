#pragma once

// Amplitude-phase decomposition of a single oscillator.  From two real
// solutions (u, v) with unit Wronskian, rho = sqrt(u^2 + v^2) obeys
//   rho'' + omega_sq(t) rho = 1 / rho^3
// and theta(t) = int dt / rho^2 gives the complex solution rho exp(-i theta).
// The quadratic invariant along a physical trajectory (x, p) is
//   I = (1/2) [ (x / rho)^2 + (rho p - rho' x)^2 ].

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdosc/classical.hpp"

namespace tdosc {

class AmplitudePhase {
 public:
  AmplitudePhase(Trajectory u, Trajectory v, double scale_u, double scale_v,
                 double wronskian_raw, std::string id_u, std::string id_v)
      : u_(std::move(u)),
        v_(std::move(v)),
        su_(scale_u),
        sv_(scale_v),
        w_raw_(wronskian_raw),
        id_u_(std::move(id_u)),
        id_v_(std::move(id_v)),
        theta_(make_theta()) {}

  double t0() const { return std::min(u_.t0(), u_.t1()); }
  double t1() const { return std::max(u_.t0(), u_.t1()); }
  double wronskian() const { return w_raw_; }
  const std::string& source_u() const { return id_u_; }
  const std::string& source_v() const { return id_v_; }
  const Trajectory& pair_u() const { return u_; }
  const ChainSpec& spec() const { return u_.spec(); }

  double rho(double t) const {
    const auto [uu, vv] = pair_values(t);
    return std::hypot(uu.first, vv.first);
  }

  double rho_dot(double t) const {
    const auto [uu, vv] = pair_values(t);
    const double r = std::hypot(uu.first, vv.first);
    return (uu.first * uu.second + vv.first * vv.second) / r;
  }

  // Analytic second derivative using u'' = -omega_sq u from the chain ODE.
  double rho_ddot(double t) const {
    const auto [uu, vv] = pair_values(t);
    const double r = std::hypot(uu.first, vv.first);
    const double rd = (uu.first * uu.second + vv.first * vv.second) / r;
    const double wsq = u_.spec().omega_sq[0](t);
    const double num = -wsq * (uu.first * uu.first + vv.first * vv.first) +
                       uu.second * uu.second + vv.second * vv.second - rd * rd;
    return num / r;
  }

  double theta(double t) const { return theta_(t); }

  // Normalized complex solution rho exp(-i theta) and its derivative.
  std::complex<double> u_complex(double t) const {
    return rho(t) * std::exp(std::complex<double>(0.0, -theta(t)));
  }
  std::complex<double> du_complex(double t) const {
    const double r = rho(t);
    return (rho_dot(t) - std::complex<double>(0.0, 1.0) / r) *
           std::exp(std::complex<double>(0.0, -theta(t)));
  }

  void validate() const {
    double prev_theta = -std::numeric_limits<double>::infinity();
    for (double t : u_.node_times()) {
      if (!(rho(t) > 0.0))
        throw std::runtime_error("amplitude-phase: rho not positive at t=" + std::to_string(t));
      const double th = theta(t);
      if (th < prev_theta - 1e-12)
        throw std::runtime_error("amplitude-phase: phase not monotone at t=" + std::to_string(t));
      prev_theta = th;
    }
  }

 private:
  // ((u, u'), (v, v')) with normalization applied.
  std::pair<std::pair<double, double>, std::pair<double, double>> pair_values(double t) const {
    return {{su_ * u_.u(0, t), su_ * u_.du(0, t)}, {sv_ * v_.u(0, t), sv_ * v_.du(0, t)}};
  }

  CumulativeIntegral make_theta() const {
    // Phase rides the u-trajectory's interpolant; v is evaluated through its
    // own stored interpolant inside the integrand.
    return CumulativeIntegral(u_.dense(), [this](double t, std::span<const double> y) {
      const double uu = su_ * y[0];
      const double vv = sv_ * v_.u(0, t);
      return 1.0 / (uu * uu + vv * vv);
    });
  }

  Trajectory u_, v_;
  double su_, sv_, w_raw_;
  std::string id_u_, id_v_;
  CumulativeIntegral theta_;
};

// Builds the decomposition from two single-oscillator solutions of the same
// chain.  The pair is normalized symmetrically (both solutions scaled by
// 1/sqrt(|W|), v additionally by sign(W)) so the normalized Wronskian is +1;
// joint rescaling of the source pair therefore leaves rho unchanged.
inline AmplitudePhase rho_from_pair(const Trajectory& u, const Trajectory& v,
                                    std::string id_u = "u", std::string id_v = "v") {
  detail::require_same_spec(u, v);
  if (u.spec().n != 1)
    throw std::invalid_argument("amplitude-phase: requires a single-oscillator chain");
  auto [lo, hi] = detail::common_window(u, v);
  const double w = invariant_classical(u, v, lo);
  if (std::abs(w) < 1e-12)
    throw std::invalid_argument("amplitude-phase: source pair is degenerate (|W| < 1e-12)");
  const double s = 1.0 / std::sqrt(std::abs(w));
  const double sv = w > 0 ? s : -s;
  (void)hi;
  return AmplitudePhase(u, v, s, sv, w, std::move(id_u), std::move(id_v));
}

// Max over interior uniform samples of |rho'' + omega_sq rho - 1/rho^3| with
// rho'' from a centered 4th-order finite-difference stencil.  Serves as an
// independent cross-check of the analytic rho_ddot path.
inline double ermakov_residual(const AmplitudePhase& ap, const TimeFunction& omega_sq,
                               double spacing = 1e-3) {
  const double lo = ap.t0(), hi = ap.t1();
  const std::size_t count = static_cast<std::size_t>(std::floor((hi - lo) / spacing)) + 1;
  if (count < 5)
    throw std::invalid_argument("ermakov residual: fewer than five samples in window");
  std::vector<double> r(count);
  for (std::size_t i = 0; i < count; ++i) r[i] = ap.rho(lo + static_cast<double>(i) * spacing);
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < count; ++i) {
    const double t = lo + static_cast<double>(i) * spacing;
    const double dd =
        (-r[i - 2] + 16.0 * r[i - 1] - 30.0 * r[i] + 16.0 * r[i + 1] - r[i + 2]) /
        (12.0 * spacing * spacing);
    const double res = dd + omega_sq(t) * r[i] - 1.0 / (r[i] * r[i] * r[i]);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

inline double lewis_value(const AmplitudePhase& ap, double x, double p, double t) {
  const double r = ap.rho(t), rd = ap.rho_dot(t);
  const double a = x / r, b = r * p - rd * x;
  return 0.5 * (a * a + b * b);
}

}  // namespace tdosc
