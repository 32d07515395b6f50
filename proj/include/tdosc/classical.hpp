#pragma once

// Classical dynamics of the coupled oscillator chain
//   u_i'' + omega_sq_i(t) u_i = -eta_{i-1,i}(t) u_{i-1} - eta_{i,i+1}(t) u_{i+1}
// together with the conserved bilinear of two solutions
//   G(t) = sum_i [u_i v_i' - u_i' v_i]
// and, for two oscillators, the per-oscillator split of that invariant whose
// coupling integrals cancel in the sum.

#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "tdosc/csv.hpp"
#include "tdosc/ode.hpp"
#include "tdosc/time_function.hpp"

namespace tdosc {

// State ordering everywhere: (u_1..u_n, du_1..du_n).
struct OscState {
  std::vector<double> u;
  std::vector<double> du;

  std::size_t size() const { return u.size(); }

  void validate(std::size_t n) const {
    if (u.size() != n || du.size() != n)
      throw std::invalid_argument("state: expected " + std::to_string(n) + " positions and velocities");
    for (double v : u)
      if (!std::isfinite(v)) throw std::invalid_argument("state: non-finite position");
    for (double v : du)
      if (!std::isfinite(v)) throw std::invalid_argument("state: non-finite velocity");
  }

  std::vector<double> flat() const {
    std::vector<double> y(u);
    y.insert(y.end(), du.begin(), du.end());
    return y;
  }

  static OscState from_flat(std::span<const double> y) {
    const std::size_t n = y.size() / 2;
    return OscState{{y.begin(), y.begin() + n}, {y.begin() + n, y.end()}};
  }
};

// Time derivative of the flattened state under a chain specification.
inline void chain_rhs(const ChainSpec& spec, double t, std::span<const double> y,
                      std::span<double> dy) {
  const std::size_t n = spec.n;
  for (std::size_t i = 0; i < n; ++i) dy[i] = y[n + i];
  for (std::size_t i = 0; i < n; ++i) {
    double acc = -spec.omega_sq[i](t) * y[i];
    if (i > 0) acc -= spec.eta[i - 1](t) * y[i - 1];
    if (i + 1 < n) acc -= spec.eta[i](t) * y[i + 1];
    dy[n + i] = acc;
  }
}

class Trajectory {
 public:
  Trajectory(ChainSpec spec, DenseSolution sol)
      : spec_(std::move(spec)), sol_(std::move(sol)) {}

  const ChainSpec& spec() const { return spec_; }
  const DenseSolution& dense() const { return sol_; }
  double tol() const { return sol_.tol(); }
  double t0() const { return sol_.t_front(); }
  double t1() const { return sol_.t_back(); }
  const std::vector<double>& node_times() const { return sol_.node_times(); }

  OscState at(double t) const { return OscState::from_flat(sol_.eval(t)); }
  double u(std::size_t i, double t) const { return sol_.eval_component(t, i); }
  double du(std::size_t i, double t) const { return sol_.eval_component(t, spec_.n + i); }

  // CSV rows: t,u_1..u_n,du_1..du_n at the integrator nodes.
  void to_csv(std::ostream& os) const {
    const std::size_t n = spec_.n;
    os << "t";
    for (std::size_t i = 1; i <= n; ++i) os << ",u_" << i;
    for (std::size_t i = 1; i <= n; ++i) os << ",du_" << i;
    os << "\n";
    const auto& times = sol_.node_times();
    for (std::size_t k = 0; k < times.size(); ++k) {
      os << csv::fmt(times[k]);
      const auto y = sol_.state_at_node(k);
      for (std::size_t i = 0; i < 2 * n; ++i) os << "," << csv::fmt(y[i]);
      os << "\n";
    }
  }

 private:
  ChainSpec spec_;
  DenseSolution sol_;
};

inline Trajectory integrate(const ChainSpec& spec, const OscState& init, double t0,
                            double t1, double tol) {
  spec.validate();
  init.validate(spec.n);
  OdeOptions opt;
  opt.tol = tol;
  auto rhs = [&spec](double t, std::span<const double> y, std::span<double> dy) {
    chain_rhs(spec, t, y, dy);
  };
  DenseSolution sol = integrate_dopri5(rhs, init.flat(), t0, t1, opt);
  return Trajectory(spec, std::move(sol));
}

namespace detail {
inline void require_same_spec(const Trajectory& a, const Trajectory& b) {
  if (!(a.spec() == b.spec()))
    throw std::invalid_argument("invariant: trajectories use different chain specifications");
}

// Window common to both trajectories, as [lo, hi].
inline std::pair<double, double> common_window(const Trajectory& a, const Trajectory& b) {
  const double alo = std::min(a.t0(), a.t1()), ahi = std::max(a.t0(), a.t1());
  const double blo = std::min(b.t0(), b.t1()), bhi = std::max(b.t0(), b.t1());
  const double lo = std::max(alo, blo), hi = std::min(ahi, bhi);
  if (!(lo < hi)) throw std::invalid_argument("invariant: trajectories do not overlap in time");
  return {lo, hi};
}

// Merged node times of both trajectories restricted to the common window.
inline std::vector<double> merged_samples(const Trajectory& a, const Trajectory& b) {
  auto [lo, hi] = common_window(a, b);
  std::vector<double> ts;
  for (const auto* tr : {&a, &b})
    for (double t : tr->node_times())
      if (t >= lo && t <= hi) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}
}  // namespace detail

// G(t) = sum_i [u_i v_i' - u_i' v_i] for two solutions of the same chain.
inline double invariant_classical(const Trajectory& u, const Trajectory& v, double t) {
  detail::require_same_spec(u, v);
  const std::size_t n = u.spec().n;
  const auto yu = u.at(t), yv = v.at(t);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += yu.u[i] * yv.du[i] - yu.du[i] * yv.u[i];
  return acc;
}

// max over merged sample times of |G(t) - G(t_first)| / max(1, |G(t_first)|).
inline double invariant_drift(const Trajectory& u, const Trajectory& v) {
  const auto ts = detail::merged_samples(u, v);
  const double g0 = invariant_classical(u, v, ts.front());
  const double scale = std::max(1.0, std::abs(g0));
  double worst = 0.0;
  for (double t : ts)
    worst = std::max(worst, std::abs(invariant_classical(u, v, t) - g0) / scale);
  return worst;
}

// Per-oscillator invariant split for a two-oscillator chain.  With coupling
// accumulants F(t) = int eta u_x dt and K(t) = int eta u_y dt,
//   G_x(t) = u_x x' - x u_x' - [F(t) y - K(t) x],   G_y symmetric,
// only the sum G_x + G_y is conserved; the accumulants cancel in the sum.
struct PairInvariantReport {
  std::vector<double> times;
  std::vector<double> g_x, g_y, g_sum;
  std::vector<double> f_acc, k_acc;

  double sum_drift() const {
    const double g0 = g_sum.front();
    const double scale = std::max(1.0, std::abs(g0));
    double worst = 0.0;
    for (double g : g_sum) worst = std::max(worst, std::abs(g - g0) / scale);
    return worst;
  }

  double component_variation() const {  // max excursion of either component
    double wx = 0.0, wy = 0.0;
    for (double g : g_x) wx = std::max(wx, std::abs(g - g_x.front()));
    for (double g : g_y) wy = std::max(wy, std::abs(g - g_y.front()));
    return std::max(wx, wy);
  }

  // CSV rows: t,G_x,G_y,G_sum,F,K
  void to_csv(std::ostream& os) const {
    os << "t,G_x,G_y,G_sum,F,K\n";
    for (std::size_t k = 0; k < times.size(); ++k)
      os << csv::fmt(times[k]) << "," << csv::fmt(g_x[k]) << "," << csv::fmt(g_y[k]) << ","
         << csv::fmt(g_sum[k]) << "," << csv::fmt(f_acc[k]) << "," << csv::fmt(k_acc[k]) << "\n";
  }
};

inline PairInvariantReport pair_invariants(const Trajectory& sol, const Trajectory& phys) {
  detail::require_same_spec(sol, phys);
  if (sol.spec().n != 2)
    throw std::invalid_argument("pair invariants: defined for two-oscillator chains");
  const TimeFunction& eta = sol.spec().eta[0];

  // Quadratures ride the u-solution's own interpolant.
  CumulativeIntegral F(sol.dense(), [&eta](double t, std::span<const double> y) {
    return eta(t) * y[0];
  });
  CumulativeIntegral K(sol.dense(), [&eta](double t, std::span<const double> y) {
    return eta(t) * y[1];
  });

  auto [lo, hi] = detail::common_window(sol, phys);
  PairInvariantReport rep;
  for (double t : sol.node_times()) {
    if (t < lo || t > hi) continue;
    const auto yu = sol.at(t);
    const auto yx = phys.at(t);
    const double f = F(t), k = K(t);
    const double gx = yu.u[0] * yx.du[0] - yx.u[0] * yu.du[0] - (f * yx.u[1] - k * yx.u[0]);
    const double gy = yu.u[1] * yx.du[1] - yx.u[1] * yu.du[1] - (k * yx.u[0] - f * yx.u[1]);
    rep.times.push_back(t);
    rep.g_x.push_back(gx);
    rep.g_y.push_back(gy);
    rep.g_sum.push_back(gx + gy);
    rep.f_acc.push_back(f);
    rep.k_acc.push_back(k);
  }
  return rep;
}

}  // namespace tdosc
