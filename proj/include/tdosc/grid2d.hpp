#pragma once

// 2D grid wavefunctions with a midpoint-sampled Strang propagator for
// quadratic Hamiltonians, plus the unitary coordinate transforms used by the
// transformation pipeline: scaling frames, shear-decomposed rotations, and
// band-limited axis rescalings.  Storage is row-major, psi[ix*ny + iy].

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tdosc/fft.hpp"
#include "tdosc/gaussian.hpp"
#include "tdosc/grid1d.hpp"

namespace tdosc {

struct Quadratic2DCoeffs {
  // H = inv_mass_x p_x^2/2 + inv_mass_y p_y^2/2 + cross_pp p_x p_y + V(t,x,y).
  // Null entries default to inv_mass = 1, cross = 0, V = 0.
  std::function<double(double)> inv_mass_x;
  std::function<double(double)> inv_mass_y;
  std::function<double(double)> cross_pp;
  std::function<double(double, double, double)> potential;
};

enum class ScalingDirection { forward, inverse };

class WaveGrid2D {
 public:
  using State = std::vector<std::complex<double>>;

  WaveGrid2D(std::size_t nx, std::size_t ny, double lx, double ly)
      : nx_(nx), ny_(ny), lx_(lx), ly_(ly), plan_x_(nx), plan_y_(ny) {
    if (!fft::is_power_of_two(nx) || !fft::is_power_of_two(ny) || nx < 8 || ny < 8)
      throw std::invalid_argument("grid2d: sizes must be powers of two >= 8");
    if (!(lx > 0) || !(ly > 0)) throw std::invalid_argument("grid2d: lengths must be positive");
    dx_ = lx / static_cast<double>(nx);
    dy_ = ly / static_cast<double>(ny);
    x_.resize(nx);
    y_.resize(ny);
    for (std::size_t i = 0; i < nx; ++i) x_[i] = -0.5 * lx + dx_ * static_cast<double>(i);
    for (std::size_t i = 0; i < ny; ++i) y_[i] = -0.5 * ly + dy_ * static_cast<double>(i);
    kx_ = fft::wavenumbers(nx, dx_);
    ky_ = fft::wavenumbers(ny, dy_);
  }

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double cell() const { return dx_ * dy_; }
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }
  const std::vector<double>& kxs() const { return kx_; }
  const std::vector<double>& kys() const { return ky_; }

  State gaussian(double x0, double px0, double y0, double py0, double sx,
                 double sy) const {
    if (!(sx > 0) || !(sy > 0)) throw std::invalid_argument("grid2d: sigma must be positive");
    const double nrm = std::pow(3.14159265358979323846 * sx * sx, -0.25) *
                       std::pow(3.14159265358979323846 * sy * sy, -0.25);
    State psi(nx_ * ny_);
    for (std::size_t ix = 0; ix < nx_; ++ix) {
      const double ddx = x_[ix] - x0;
      const double gx = std::exp(-ddx * ddx / (2.0 * sx * sx));
      for (std::size_t iy = 0; iy < ny_; ++iy) {
        const double ddy = y_[iy] - y0;
        const double gy = std::exp(-ddy * ddy / (2.0 * sy * sy));
        psi[ix * ny_ + iy] = std::polar(nrm * gx * gy, px0 * ddx + py0 * ddy);
      }
    }
    return psi;
  }

  double norm_sq(const State& psi) const {
    double s = 0;
    for (const auto& v : psi) s += std::norm(v);
    return s * cell();
  }

  std::complex<double> overlap(const State& a, const State& b) const {
    std::complex<double> s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s * cell();
  }

  double fidelity(const State& a, const State& b) const {
    return std::abs(overlap(a, b)) / std::sqrt(norm_sq(a) * norm_sq(b));
  }

  void normalize(State& psi) const {
    const double s = 1.0 / std::sqrt(norm_sq(psi));
    for (auto& v : psi) v *= s;
  }

  double boundary_fraction(const State& psi) const {
    const std::size_t ex = std::max<std::size_t>(1, nx_ / 20);
    const std::size_t ey = std::max<std::size_t>(1, ny_ / 20);
    double peak = 0, border = 0;
    for (std::size_t ix = 0; ix < nx_; ++ix) {
      const bool xedge = ix < ex || ix >= nx_ - ex;
      for (std::size_t iy = 0; iy < ny_; ++iy) {
        const double a = std::abs(psi[ix * ny_ + iy]);
        peak = std::max(peak, a);
        if (xedge || iy < ey || iy >= ny_ - ey) border = std::max(border, a);
      }
    }
    return peak > 0 ? border / peak : 0.0;
  }

  void fft_x(State& psi, bool forward) const {
    for (std::size_t iy = 0; iy < ny_; ++iy) {
      if (forward)
        plan_x_.forward(psi.data() + iy, ny_);
      else
        plan_x_.inverse(psi.data() + iy, ny_);
    }
  }

  void fft_y(State& psi, bool forward) const {
    for (std::size_t ix = 0; ix < nx_; ++ix) {
      if (forward)
        plan_y_.forward(psi.data() + ix * ny_);
      else
        plan_y_.inverse(psi.data() + ix * ny_);
    }
  }

  // First and symmetrized second moments in the ordering (x, y, p_x, p_y).
  MomentState moments(const State& psi) const {
    const double nrm = norm_sq(psi);
    double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
    for (std::size_t ix = 0; ix < nx_; ++ix)
      for (std::size_t iy = 0; iy < ny_; ++iy) {
        const double w = std::norm(psi[ix * ny_ + iy]);
        mx += w * x_[ix];
        my += w * y_[iy];
        mxx += w * x_[ix] * x_[ix];
        myy += w * y_[iy] * y_[iy];
        mxy += w * x_[ix] * y_[iy];
      }
    const double da = cell() / nrm;
    mx *= da; my *= da; mxx *= da; myy *= da; mxy *= da;

    State px(psi), py(psi);
    fft_x(px, true);
    for (std::size_t ix = 0; ix < nx_; ++ix)
      for (std::size_t iy = 0; iy < ny_; ++iy) px[ix * ny_ + iy] *= kx_[ix];
    fft_x(px, false);
    fft_y(py, true);
    for (std::size_t ix = 0; ix < nx_; ++ix)
      for (std::size_t iy = 0; iy < ny_; ++iy) py[ix * ny_ + iy] *= ky_[iy];
    fft_y(py, false);

    double mpx = 0, mpy = 0, mpxpx = 0, mpypy = 0, mpxpy = 0;
    double mxpx = 0, mypy = 0, mxpy = 0, mypx = 0;
    for (std::size_t ix = 0; ix < nx_; ++ix)
      for (std::size_t iy = 0; iy < ny_; ++iy) {
        const std::size_t id = ix * ny_ + iy;
        const double rpx = (std::conj(psi[id]) * px[id]).real();
        const double rpy = (std::conj(psi[id]) * py[id]).real();
        mpx += rpx;
        mpy += rpy;
        mpxpx += std::norm(px[id]);
        mpypy += std::norm(py[id]);
        mpxpy += (std::conj(px[id]) * py[id]).real();
        mxpx += x_[ix] * rpx;
        mypy += y_[iy] * rpy;
        mxpy += x_[ix] * rpy;
        mypx += y_[iy] * rpx;
      }
    mpx *= da; mpy *= da; mpxpx *= da; mpypy *= da; mpxpy *= da;
    mxpx *= da; mypy *= da; mxpy *= da; mypx *= da;

    MomentState s;
    s.n = 2;
    s.mean = Eigen::VectorXd(4);
    s.mean << mx, my, mpx, mpy;
    s.cov = Eigen::MatrixXd(4, 4);
    s.cov << mxx - mx * mx, mxy - mx * my, mxpx - mx * mpx, mxpy - mx * mpy,
        mxy - mx * my, myy - my * my, mypx - my * mpx, mypy - my * mpy,
        mxpx - mx * mpx, mypx - my * mpx, mpxpx - mpx * mpx, mpxpy - mpx * mpy,
        mxpy - mx * mpy, mypy - my * mpy, mpxpy - mpx * mpy, mpypy - mpy * mpy;
    return s;
  }

  // <u_x p_x - u_x' x + u_y p_y - u_y' y> on the grid state.
  std::complex<double> expect_g2(const State& psi, double ux, double dux, double uy,
                                 double duy) const {
    const MomentState m = moments(psi);
    return {ux * m.mean[2] - dux * m.mean[0] + uy * m.mean[3] - duy * m.mean[1], 0.0};
  }

  PropagationStats propagate(State& psi, const Quadratic2DCoeffs& c, double t0, double t1,
                             double dt) const {
    if (psi.size() != nx_ * ny_) throw std::invalid_argument("grid2d: state size mismatch");
    if (!(dt > 0) || !(t1 > t0)) throw std::invalid_argument("grid2d: bad time window");
    const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
    const double h = (t1 - t0) / static_cast<double>(steps);

    std::vector<std::complex<double>> vphase(nx_ * ny_), phix(nx_), phiy(ny_);
    const bool has_cross = static_cast<bool>(c.cross_pp);
    std::vector<std::complex<double>> kfull(has_cross ? nx_ * ny_ : 0);

    PropagationStats stats;
    stats.steps = steps;
    for (std::size_t s = 0; s < steps; ++s) {
      const double tm = t0 + (static_cast<double>(s) + 0.5) * h;
      const double imx = c.inv_mass_x ? c.inv_mass_x(tm) : 1.0;
      const double imy = c.inv_mass_y ? c.inv_mass_y(tm) : 1.0;
      const double cpp = has_cross ? c.cross_pp(tm) : 0.0;

      if (c.potential) {
        for (std::size_t ix = 0; ix < nx_; ++ix)
          for (std::size_t iy = 0; iy < ny_; ++iy)
            vphase[ix * ny_ + iy] =
                std::polar(1.0, -0.5 * h * c.potential(tm, x_[ix], y_[iy]));
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= vphase[i];
      }

      fft_x(psi, true);
      fft_y(psi, true);
      if (!has_cross) {
        for (std::size_t ix = 0; ix < nx_; ++ix)
          phix[ix] = std::polar(1.0, -0.5 * h * imx * kx_[ix] * kx_[ix]);
        for (std::size_t iy = 0; iy < ny_; ++iy)
          phiy[iy] = std::polar(1.0, -0.5 * h * imy * ky_[iy] * ky_[iy]);
        for (std::size_t ix = 0; ix < nx_; ++ix)
          for (std::size_t iy = 0; iy < ny_; ++iy) psi[ix * ny_ + iy] *= phix[ix] * phiy[iy];
      } else {
        for (std::size_t ix = 0; ix < nx_; ++ix)
          for (std::size_t iy = 0; iy < ny_; ++iy)
            kfull[ix * ny_ + iy] =
                std::polar(1.0, -h * (0.5 * imx * kx_[ix] * kx_[ix] +
                                      0.5 * imy * ky_[iy] * ky_[iy] +
                                      cpp * kx_[ix] * ky_[iy]));
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kfull[i];
      }
      fft_y(psi, false);
      fft_x(psi, false);

      if (c.potential)
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= vphase[i];

      const double bf = boundary_fraction(psi);
      stats.boundary_fraction = std::max(stats.boundary_fraction, bf);
      if (bf > 1e-6)
        throw std::runtime_error("grid2d: wavefunction reached the boundary guard band");
    }
    return stats;
  }

  // Coupled pair H = (p_x^2 + p_y^2 + Ox^2 x^2 + Oy^2 y^2)/2 + eta x y.
  PropagationStats propagate_coupled(State& psi, const ChainSpec& spec, double t0,
                                     double t1, double dt) const {
    spec.validate();
    if (spec.n != 2) throw std::invalid_argument("grid2d: propagate_coupled needs n == 2");
    Quadratic2DCoeffs c;
    c.potential = [&spec](double t, double x, double y) {
      return 0.5 * (spec.omega_sq[0](t) * x * x + spec.omega_sq[1](t) * y * y) +
             spec.eta[0](t) * x * y;
    };
    return propagate(psi, c, t0, t1, dt);
  }

  // Band-limited substitution psi(.., s*coord, ..) along one axis; samples
  // whose source coordinate leaves the domain become zero.  Exact for states
  // resolved on the grid, O(n^2) per line via direct evaluation of the
  // trigonometric interpolant.
  void scale_axis(State& psi, int axis, double factor) const {
    if (axis != 0 && axis != 1) throw std::invalid_argument("grid2d: axis must be 0 or 1");
    if (factor == 1.0) return;
    if (factor == 0.0 || !std::isfinite(factor))
      throw std::invalid_argument("grid2d: bad scale factor");
    const std::size_t n = axis == 0 ? nx_ : ny_;
    const std::size_t lines = axis == 0 ? ny_ : nx_;
    const std::size_t stride = axis == 0 ? ny_ : 1;
    const auto& coord = axis == 0 ? x_ : y_;
    const fft::Radix2Plan& plan = axis == 0 ? plan_x_ : plan_y_;
    const double base = 2.0 * 3.14159265358979323846 / (coord[1] - coord[0]) /
                        static_cast<double>(n);
    const double lo = coord.front();
    const double hi = coord.front() + (coord[1] - coord[0]) * static_cast<double>(n);

    std::vector<std::complex<double>> line(n), out(n);
    for (std::size_t l = 0; l < lines; ++l) {
      std::complex<double>* first =
          psi.data() + (axis == 0 ? l : l * ny_);
      for (std::size_t j = 0; j < n; ++j) line[j] = first[j * stride];
      plan.forward(line.data());
      for (std::size_t j = 0; j < n; ++j) {
        const double xs = factor * coord[j];
        if (xs < lo - 1e-12 || xs >= hi - 1e-12) {
          out[j] = 0;
          continue;
        }
        // The spectral basis is anchored at the first grid point, so the
        // evaluation phase uses the offset from there.
        const std::complex<double> w = std::polar(1.0, base * (xs - lo));
        std::complex<double> acc = 0, cur = 1;
        for (std::size_t m = 0; m < n / 2; ++m) {
          acc += line[m] * cur;
          cur *= w;
        }
        const std::complex<double> wc = std::conj(w);
        cur = wc;
        for (std::size_t idx = n - 1; idx >= n / 2; --idx) {
          acc += line[idx] * cur;
          cur *= wc;
        }
        out[j] = acc / static_cast<double>(n);
      }
      for (std::size_t j = 0; j < n; ++j) first[j * stride] = out[j];
    }
  }

  // Scaling-frame transform.  Forward maps psi into the frame where the
  // harmonic potential of a pair with amplitude solutions (u_x, u_y) cancels:
  //   phi(x,y) = sqrt(|ux uy|) exp(-i (ux' ux/2) x^2 - i (uy' uy/2) y^2) psi(ux x, uy y).
  // Inverse composes the exact algebraic inverse.
  void apply_scaling_transform(State& psi, double ux, double dux, double uy, double duy,
                               ScalingDirection dir) const {
    if (std::abs(ux) < 1e-9 || std::abs(uy) < 1e-9)
      throw std::invalid_argument("grid2d: scaling transform at vanishing u");
    double fx, fy, cx, cy, pref;
    if (dir == ScalingDirection::forward) {
      fx = ux; fy = uy;
      cx = -0.5 * dux * ux;
      cy = -0.5 * duy * uy;
      pref = std::sqrt(std::abs(ux * uy));
    } else {
      fx = 1.0 / ux; fy = 1.0 / uy;
      cx = 0.5 * dux / ux;
      cy = 0.5 * duy / uy;
      pref = 1.0 / std::sqrt(std::abs(ux * uy));
    }
    scale_axis(psi, 0, fx);
    scale_axis(psi, 1, fy);
    for (std::size_t ix = 0; ix < nx_; ++ix) {
      const double ax = cx * x_[ix] * x_[ix];
      for (std::size_t iy = 0; iy < ny_; ++iy)
        psi[ix * ny_ + iy] *= std::polar(pref, ax + cy * y_[iy] * y_[iy]);
    }
  }

  // Coordinate substitution psi -> psi(R_theta r): x-shear, squeeze, y-shear.
  // The composite of the three maps is exactly the rotation matrix
  // [[cos, -sin], [sin, cos]].
  void shear_rotate(State& psi, double theta) const {
    if (theta == 0.0) return;
    const double t = std::tan(theta);
    const double c = std::cos(theta);
    if (!(std::abs(t) <= 2.0))
      throw std::invalid_argument("grid2d: rotation angle too steep for shear passes");

    fft_x(psi, true);
    for (std::size_t ix = 0; ix < nx_; ++ix)
      for (std::size_t iy = 0; iy < ny_; ++iy)
        psi[ix * ny_ + iy] *= std::polar(1.0, -kx_[ix] * y_[iy] * t);
    fft_x(psi, false);

    scale_axis(psi, 0, 1.0 / c);
    scale_axis(psi, 1, c);

    fft_y(psi, true);
    for (std::size_t ix = 0; ix < nx_; ++ix)
      for (std::size_t iy = 0; iy < ny_; ++iy)
        psi[ix * ny_ + iy] *= std::polar(1.0, ky_[iy] * x_[ix] * t);
    fft_y(psi, false);
  }

  // Rotation of the state as an image: a packet at (r, 0) moves to
  // (r cos theta, r sin theta).
  void apply_rotation(State& psi, double theta) const { shear_rotate(psi, -theta); }

 private:
  std::size_t nx_, ny_;
  double lx_, ly_, dx_ = 0, dy_ = 0;
  fft::Radix2Plan plan_x_, plan_y_;
  std::vector<double> x_, y_, kx_, ky_;
};

}  // namespace tdosc
