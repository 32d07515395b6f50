#pragma once

// Uniform 1D grid states and a Strang split-step propagator for
// H(t) = inv_mass(t) p^2 / 2 + quad(t) y^2 + lin_p(t) p + constant(t).
// Coefficients are sampled at step midpoints, which keeps second order
// accuracy for smooth time dependence.  The constant term only shifts the
// global phase of one state, but relative phases matter when many lines
// with different constants are recombined, so it is applied.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tdosc/fft.hpp"

namespace tdosc {

struct Moments1D {
  double y = 0, p = 0;
  double var_y = 0, var_p = 0, cov_yp = 0;  // central, symmetrized
};

struct ReducedCoeffs {
  std::function<double(double)> inv_mass;  // 1/mu(t)
  std::function<double(double)> quad;      // coefficient of y^2
  std::function<double(double)> lin_p;     // coefficient of p
  std::function<double(double)> constant;  // additive c(t)
};

struct PropagationStats {
  std::size_t steps = 0;
  double boundary_fraction = 0;  // max outer-edge amplitude / peak amplitude
};

class WaveGrid1D {
 public:
  WaveGrid1D(std::size_t n, double length)
      : n_(n), length_(length), dy_(length / static_cast<double>(n)), plan_(n) {
    if (!fft::is_power_of_two(n) || n < 8)
      throw std::invalid_argument("grid1d: size must be a power of two >= 8");
    if (!(length > 0)) throw std::invalid_argument("grid1d: length must be positive");
    y_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      y_[i] = -0.5 * length + dy_ * static_cast<double>(i);
    k_ = fft::wavenumbers(n, dy_);
  }

  std::size_t size() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return dy_; }
  const std::vector<double>& coords() const { return y_; }
  const std::vector<double>& wavenumbers() const { return k_; }
  const fft::Radix2Plan& plan() const { return plan_; }

  // Normalized packet with <y> = y0, <p> = p0, Var(y) = sigma^2 / 2.
  std::vector<std::complex<double>> gaussian(double y0, double p0, double sigma) const {
    if (!(sigma > 0)) throw std::invalid_argument("grid1d: sigma must be positive");
    std::vector<std::complex<double>> psi(n_);
    const double norm = std::pow(3.14159265358979323846 * sigma * sigma, -0.25);
    for (std::size_t i = 0; i < n_; ++i) {
      const double dyc = y_[i] - y0;
      psi[i] = std::polar(norm * std::exp(-dyc * dyc / (2.0 * sigma * sigma)), p0 * dyc);
    }
    return psi;
  }

  double norm_sq(std::span<const std::complex<double>> psi) const {
    double s = 0;
    for (const auto& v : psi) s += std::norm(v);
    return s * dy_;
  }

  std::complex<double> overlap(std::span<const std::complex<double>> a,
                               std::span<const std::complex<double>> b) const {
    std::complex<double> s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += std::conj(a[i]) * b[i];
    return s * dy_;
  }

  double fidelity(std::span<const std::complex<double>> a,
                  std::span<const std::complex<double>> b) const {
    return std::abs(overlap(a, b)) / std::sqrt(norm_sq(a) * norm_sq(b));
  }

  void normalize(std::span<std::complex<double>> psi) const {
    const double s = 1.0 / std::sqrt(norm_sq(psi));
    for (auto& v : psi) v *= s;
  }

  Moments1D moments(std::span<const std::complex<double>> psi) const {
    const double nrm = norm_sq(psi);
    double my = 0, myy = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double w = std::norm(psi[i]);
      my += w * y_[i];
      myy += w * y_[i] * y_[i];
    }
    my *= dy_ / nrm;
    myy *= dy_ / nrm;

    // p psi via spectral derivative, then <p>, <p^2>, and Re<psi|y p|psi>.
    std::vector<std::complex<double>> ppsi(psi.begin(), psi.end());
    plan_.forward(ppsi.data());
    for (std::size_t i = 0; i < n_; ++i) ppsi[i] *= k_[i];
    plan_.inverse(ppsi.data());
    double mp = 0, mpp = 0, myp = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      mp += (std::conj(psi[i]) * ppsi[i]).real();
      mpp += std::norm(ppsi[i]);
      myp += y_[i] * (std::conj(psi[i]) * ppsi[i]).real();
    }
    mp *= dy_ / nrm;
    mpp *= dy_ / nrm;
    myp *= dy_ / nrm;

    Moments1D m;
    m.y = my;
    m.p = mp;
    m.var_y = myy - my * my;
    m.var_p = mpp - mp * mp;
    m.cov_yp = myp - my * mp;
    return m;
  }

  double boundary_fraction(std::span<const std::complex<double>> psi) const {
    const std::size_t edge = std::max<std::size_t>(1, n_ / 20);
    double peak = 0, border = 0;
    for (std::size_t i = 0; i < n_; ++i) peak = std::max(peak, std::abs(psi[i]));
    for (std::size_t i = 0; i < edge; ++i) {
      border = std::max(border, std::abs(psi[i]));
      border = std::max(border, std::abs(psi[n_ - 1 - i]));
    }
    return peak > 0 ? border / peak : 0.0;
  }

  // boundary_abort: relative edge-amplitude threshold that aborts the run;
  // callers that aggregate many low-weight lines pass infinity and enforce
  // the guard on the combined state instead.
  PropagationStats propagate(std::span<std::complex<double>> psi, const ReducedCoeffs& c,
                             double t0, double t1, double dt,
                             double boundary_abort = 1e-6) const {
    if (psi.size() != n_) throw std::invalid_argument("grid1d: state size mismatch");
    if (!(dt > 0) || !(t1 > t0)) throw std::invalid_argument("grid1d: bad time window");
    const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
    const double h = (t1 - t0) / static_cast<double>(steps);

    std::vector<std::complex<double>> vphase(n_), kphase(n_);
    PropagationStats stats;
    stats.steps = steps;
    for (std::size_t s = 0; s < steps; ++s) {
      const double tm = t0 + (static_cast<double>(s) + 0.5) * h;
      const double im = c.inv_mass ? c.inv_mass(tm) : 1.0;
      const double q = c.quad ? c.quad(tm) : 0.0;
      const double lp = c.lin_p ? c.lin_p(tm) : 0.0;
      const double cc = c.constant ? c.constant(tm) : 0.0;
      if (h * std::max(std::abs(im), std::abs(q)) > 0.5)
        throw std::runtime_error("grid1d: step too large for coefficient scale");
      for (std::size_t i = 0; i < n_; ++i)
        vphase[i] = std::polar(1.0, -0.5 * h * (q * y_[i] * y_[i] + cc));
      for (std::size_t i = 0; i < n_; ++i)
        kphase[i] = std::polar(1.0, -h * (0.5 * im * k_[i] * k_[i] + lp * k_[i]));

      for (std::size_t i = 0; i < n_; ++i) psi[i] *= vphase[i];
      plan_.forward(psi.data());
      for (std::size_t i = 0; i < n_; ++i) psi[i] *= kphase[i];
      plan_.inverse(psi.data());
      for (std::size_t i = 0; i < n_; ++i) psi[i] *= vphase[i];

      stats.boundary_fraction = std::max(stats.boundary_fraction, boundary_fraction(psi));
      if (stats.boundary_fraction > boundary_abort)
        throw std::runtime_error("grid1d: wavefunction reached the boundary guard band");
    }
    return stats;
  }

 private:
  std::size_t n_;
  double length_;
  double dy_;
  fft::Radix2Plan plan_;
  std::vector<double> y_;
  std::vector<double> k_;
};

}  // namespace tdosc
