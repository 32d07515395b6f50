// Acceptance gate for the oscillator laboratory.  Each numbered block checks
// one release criterion end to end and prints a single PASS/FAIL line with
// the measured quantities next to their limits.  The process exit code is
// the number of failed criteria, so the suite can run under ctest.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "tdosc/classical.hpp"
#include "tdosc/ermakov.hpp"
#include "tdosc/gaussian.hpp"
#include "tdosc/grid2d.hpp"
#include "tdosc/pipeline.hpp"
#include "tdosc/scenario.hpp"

using namespace tdosc;

namespace {

int failures = 0;

void report(int idx, bool ok, const std::string& detail) {
  std::printf("%s %2d  %s\n", ok ? "PASS" : "FAIL", idx, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
void guarded(int idx, F f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(idx, false, std::string("exception: ") + e.what());
  }
}

const std::size_t kSizes[] = {1, 2, 3, 5, 8};

// The two named grid scenarios used by the oracle and pipeline criteria.
ChainSpec constant_coupling_chain() {
  ChainSpec s;
  s.n = 2;
  s.omega_sq = {TimeFunction::constant(1.0), TimeFunction::constant(1.0)};
  s.eta = {TimeFunction::constant(0.1)};
  return s;
}

ChainSpec fully_td_chain() {
  ChainSpec s;
  s.n = 2;
  s.omega_sq = {TimeFunction::harmonic(1.0, 0.2, 1.0, 0.0),
                TimeFunction::harmonic(1.5, 0.1, 2.0, 0.5 * M_PI)};
  s.eta = {TimeFunction::harmonic(0.05, 0.05, 0.7, 0.0)};
  return s;
}

struct GridSetup {
  std::size_t n = 256;
  double length = 32.0;
  double dt = 1e-3;
  double t1 = 2.0;
  double x0 = 0.5, px0 = 0.2, y0 = -0.4, py0 = 0.1;
};

// Shared between criteria 7 and 8: the direct split-step solve of the fully
// time-dependent scenario is the oracle for both.
struct TdOracleRun {
  bool valid = false;
  WaveGrid2D::State psi_final;
  double seconds = 0;
};

}  // namespace

int main() {
  const auto t_suite = std::chrono::steady_clock::now();
  std::printf("acceptance gate, %zu criteria\n", std::size_t{10});

  // 1. Invariant built on the standard partner solution stays constant for
  //    randomized chains of every supported size.
  guarded(1, [] {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    for (std::size_t n : kSizes)
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scenario s = random_scenario(seed, n);
        const Trajectory tu =
            integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);
        const Trajectory tv = integrate(
            s.chain,
            OscState{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}, s.t0,
            s.t1, s.ode_tol);
        worst = std::max(worst, invariant_drift(tu, tv));
      }
    const double el = seconds_since(t0);
    report(1, worst < 1e-8 && el < 10.0,
           "invariant drift, default partner, 25 scenarios: max " + num(worst) +
               " (limit 1e-8), " + num(el) + " s (limit 10)");
  });

  // 2. Same scenarios with the independent partner pair.
  guarded(2, [] {
    double worst = 0;
    for (std::size_t n : kSizes)
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scenario s = random_scenario(seed, n);
        const Trajectory tu =
            integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);
        const Trajectory tv =
            integrate(s.chain, OscState{s.init_v, s.init_dv}, s.t0, s.t1, s.ode_tol);
        worst = std::max(worst, invariant_drift(tu, tv));
      }
    report(2, worst < 1e-8,
           "invariant drift, independent pairs: max " + num(worst) + " (limit 1e-8)");
  });

  // 3. Amplitude equation residual on randomized single oscillators, plus the
  //    constant-frequency closed form rho = Omega^{-1/2}.
  guarded(3, [] {
    double worst_res = 0;
    for (std::uint64_t seed = 101; seed <= 110; ++seed) {
      const Scenario s = random_scenario(seed, 1);
      const Trajectory tu = integrate(s.chain, OscState{{1.0}, {0.0}}, s.t0, s.t1, s.ode_tol);
      const Trajectory tv = integrate(s.chain, OscState{{0.0}, {1.0}}, s.t0, s.t1, s.ode_tol);
      const AmplitudePhase ap = rho_from_pair(tu, tv);
      worst_res = std::max(worst_res, ermakov_residual(ap, s.chain.omega_sq[0], 1e-3));
    }

    double worst_cf = 0;
    for (double wsq : {0.7, 1.3, 2.5, 4.0}) {
      ChainSpec c;
      c.n = 1;
      c.omega_sq = {TimeFunction::constant(wsq)};
      const double r = std::pow(wsq, -0.25);
      const Trajectory tu = integrate(c, OscState{{r}, {0.0}}, 0.0, 20.0, 1e-10);
      const Trajectory tv = integrate(c, OscState{{0.0}, {1.0 / r}}, 0.0, 20.0, 1e-10);
      const AmplitudePhase ap = rho_from_pair(tu, tv);
      for (int k = 0; k <= 200; ++k) {
        const double t = 20.0 * k / 200.0;
        worst_cf = std::max(worst_cf, std::abs(ap.rho(t) - r));
      }
    }
    report(3, worst_res < 1e-6 && worst_cf < 1e-10,
           "amplitude equation: residual " + num(worst_res) +
               " (limit 1e-6), constant-frequency closed form " + num(worst_cf) +
               " (limit 1e-10)");
  });

  // 4. Quadratic invariant constancy along physical trajectories.
  guarded(4, [] {
    double worst = 0;
    for (std::uint64_t seed = 101; seed <= 110; ++seed) {
      const Scenario s = random_scenario(seed, 1);
      const Trajectory tu = integrate(s.chain, OscState{{1.0}, {0.0}}, s.t0, s.t1, s.ode_tol);
      const Trajectory tv = integrate(s.chain, OscState{{0.0}, {1.0}}, s.t0, s.t1, s.ode_tol);
      const AmplitudePhase ap = rho_from_pair(tu, tv);
      const Trajectory phys = integrate(s.chain, OscState{{s.packet.x0}, {s.packet.px0}},
                                        s.t0, s.t1, s.ode_tol);
      const double i0 = lewis_value(ap, phys.u(0, s.t0), phys.du(0, s.t0), s.t0);
      for (int k = 1; k <= 400; ++k) {
        const double t = s.t0 + (s.t1 - s.t0) * k / 400.0;
        const double ik = lewis_value(ap, phys.u(0, t), phys.du(0, t), t);
        worst = std::max(worst, std::abs(ik - i0));
      }
    }
    report(4, worst < 1e-7,
           "quadratic invariant along trajectories: max drift " + num(worst) +
               " (limit 1e-7)");
  });

  // 5. Moment-level expectations of the invariant form, symplectic character
  //    of the fundamental matrix, and the uncertainty bound.
  guarded(5, [] {
    double g_drift = 0, gg_drift = 0, sdef = 0, min_eig = 0;
    for (std::size_t n : kSizes)
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scenario s = random_scenario(seed, n);
        const Trajectory tu =
            integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);
        const MomentState init = MomentState::coherent(n, s.init_u, s.init_du);
        const MomentEvolution ev = evolve_moments(s.chain, init, s.t0, s.t1, s.ode_tol);

        std::complex<double> g0;
        double gg0 = 0;
        for (int k = 0; k <= 200; ++k) {
          const double t = s.t0 + (s.t1 - s.t0) * k / 200.0;
          const MomentState ms = ev.at(t);
          const LinearForm form = g_form_from_solution(tu, t);
          const std::complex<double> g = expect_g(form, ms);
          const double gg = expect_gg_dagger(form, ms);
          if (k == 0) {
            g0 = g;
            gg0 = gg;
          }
          g_drift = std::max(g_drift, std::abs(g - g0));
          gg_drift = std::max(gg_drift, std::abs(gg - gg0));
          min_eig = std::min(min_eig, ms.min_uncertainty_eigenvalue());
          if (k % 10 == 0) sdef = std::max(sdef, symplectic_defect(ev.fundamental(t)));
        }
      }
    report(5, g_drift < 1e-8 && gg_drift < 1e-8 && sdef < 1e-8 && min_eig >= -1e-10,
           "moment-level invariance: linear drift " + num(g_drift) + ", quadratic drift " +
               num(gg_drift) + " (limits 1e-8), symplectic defect " + num(sdef) +
               " (limit 1e-8), min uncertainty eigenvalue " + num(min_eig) +
               " (floor -1e-10)");
  });

  // 6. Two-site decomposition: only the sum of the site invariants is
  //    conserved, the parts move, and the cancellation identity is exact.
  guarded(6, [] {
    double sum_drift = 0, vx_best = 0, vy_best = 0, cancel = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Scenario s = random_scenario(seed, 2);
      const Trajectory tu =
          integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);
      const Trajectory tv =
          integrate(s.chain, OscState{s.init_v, s.init_dv}, s.t0, s.t1, s.ode_tol);
      const PairInvariantReport rep = pair_invariants(tu, tv);
      sum_drift = std::max(sum_drift, rep.sum_drift());
      double vx = 0, vy = 0;
      for (double g : rep.g_x) vx = std::max(vx, std::abs(g - rep.g_x.front()));
      for (double g : rep.g_y) vy = std::max(vy, std::abs(g - rep.g_y.front()));
      vx_best = std::max(vx_best, vx);
      vy_best = std::max(vy_best, vy);
      for (std::size_t k = 0; k < rep.times.size(); ++k)
        cancel = std::max(cancel, std::abs(rep.g_sum[k] -
                                           invariant_classical(tu, tv, rep.times[k])));
    }
    report(6,
           sum_drift < 1e-8 && vx_best > 1e-3 && vy_best > 1e-3 && cancel < 1e-10,
           "two-site split: sum drift " + num(sum_drift) +
               " (limit 1e-8), component excursions " + num(vx_best) + "/" +
               num(vy_best) + " (floor 1e-3), cancellation " + num(cancel) +
               " (limit 1e-10)");
  });

  // Criteria 7 and 8 share the direct 2D solve of the fully time-dependent
  // scenario, which is expensive at this resolution.
  const GridSetup gs;
  TdOracleRun td_oracle;

  // 7. Direct grid propagation against the moment evolution.
  guarded(7, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    WaveGrid2D grid(gs.n, gs.n, gs.length, gs.length);
    const ChainSpec chain = fully_td_chain();
    WaveGrid2D::State psi = grid.gaussian(gs.x0, gs.px0, gs.y0, gs.py0, 1.0, 1.0);

    const MomentState init = grid.moments(psi);
    const MomentEvolution ev = evolve_moments(chain, init, 0.0, gs.t1, 1e-10);
    const Trajectory tu =
        integrate(chain, OscState{{1.0, 1.0}, {0.0, 0.0}}, 0.0, gs.t1, 1e-10);

    double mean_dev = 0, cov_dev = 0, g2_drift = 0;
    std::complex<double> g2_0 =
        grid.expect_g2(psi, tu.u(0, 0.0), tu.du(0, 0.0), tu.u(1, 0.0), tu.du(1, 0.0));
    const int checkpoints = 20;
    for (int k = 1; k <= checkpoints; ++k) {
      const double ta = gs.t1 * (k - 1) / checkpoints;
      const double tb = gs.t1 * k / checkpoints;
      grid.propagate_coupled(psi, chain, ta, tb, gs.dt);
      const MomentState mg = grid.moments(psi);
      const MomentState mm = ev.at(tb);
      mean_dev = std::max(mean_dev, (mg.mean - mm.mean).cwiseAbs().maxCoeff());
      cov_dev = std::max(cov_dev, (mg.cov - mm.cov).cwiseAbs().maxCoeff());
      const std::complex<double> g2 =
          grid.expect_g2(psi, tu.u(0, tb), tu.du(0, tb), tu.u(1, tb), tu.du(1, tb));
      g2_drift = std::max(g2_drift, std::abs(g2 - g2_0));
    }
    td_oracle.psi_final = psi;
    td_oracle.seconds = seconds_since(t0);
    td_oracle.valid = true;
    report(7, mean_dev < 1e-5 && cov_dev < 1e-5 && g2_drift < 1e-4,
           "grid vs moments, 256^2 dt 1e-3: mean dev " + num(mean_dev) + ", cov dev " +
               num(cov_dev) + " (limits 1e-5), linear-form drift " + num(g2_drift) +
               " (limit 1e-4)");
  });

  // 8. Transformation pipeline against the direct solver on both named
  //    scenarios, within the runtime budget.
  guarded(8, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    WaveGrid2D grid(gs.n, gs.n, gs.length, gs.length);
    const WaveGrid2D::State psi0 = grid.gaussian(gs.x0, gs.px0, gs.y0, gs.py0, 1.0, 1.0);
    PipelineOptions opt;
    opt.dt = gs.dt;

    const ChainSpec cc = constant_coupling_chain();
    PipelineResult pc = pipeline_solve(grid, cc, psi0, 0.0, gs.t1, opt);
    WaveGrid2D::State oc = psi0;
    grid.propagate_coupled(oc, cc, 0.0, gs.t1, gs.dt);
    const double fid_const = grid.fidelity(pc.psi, oc);

    const ChainSpec td = fully_td_chain();
    PipelineResult pt = pipeline_solve(grid, td, psi0, 0.0, gs.t1, opt);
    double oracle_seconds = td_oracle.seconds;
    WaveGrid2D::State ot;
    if (td_oracle.valid) {
      ot = td_oracle.psi_final;
    } else {
      const auto tr = std::chrono::steady_clock::now();
      ot = psi0;
      grid.propagate_coupled(ot, td, 0.0, gs.t1, gs.dt);
      oracle_seconds = seconds_since(tr);
    }
    const double fid_td = grid.fidelity(pt.psi, ot);

    const double el = seconds_since(t0) + oracle_seconds;
    report(8, fid_const > 0.999 && fid_td > 0.995 && el < 300.0,
           "pipeline fidelity: constant-coupling deficit " + num(1.0 - fid_const) +
               " (limit 1e-3), fully time-dependent deficit " + num(1.0 - fid_td) +
               " (limit 5e-3), " + num(el) + " s (limit 300)");
  });

  // 9. Shear-decomposed rotation against a bicubic resampling oracle, and the
  //    symmetric fixed point.
  guarded(9, [&] {
    WaveGrid2D grid(gs.n, gs.n, gs.length, gs.length);
    const double theta = 0.25 * M_PI;

    WaveGrid2D::State psi = grid.gaussian(1.2, 0.3, -0.6, 0.2, 1.0, 1.1);
    const WaveGrid2D::State ref =
        oracles::bicubic_rotate(psi, grid.nx(), grid.ny(), grid.xs().front(), grid.dx(),
                                grid.ys().front(), grid.dy(), theta);
    grid.apply_rotation(psi, theta);
    const double fid_oracle = grid.fidelity(psi, ref);

    WaveGrid2D::State sym = grid.gaussian(0, 0, 0, 0, 1.0, 1.0);
    WaveGrid2D::State rot = sym;
    grid.apply_rotation(rot, theta);
    const double fid_fixed = grid.fidelity(rot, sym);

    report(9, fid_oracle > 1.0 - 1e-5 && fid_fixed > 1.0 - 1e-8,
           "quarter-turn rotation: oracle deficit " + num(1.0 - fid_oracle) +
               " (limit 1e-5), symmetric fixed-point deficit " + num(1.0 - fid_fixed) +
               " (limit 1e-8)");
  });

  // 10. Convergence orders: split-step error falls ~4x per dt halving, ODE
  //     drift falls >= 10x per 100x tolerance tightening.
  guarded(10, [] {
    WaveGrid2D grid(64, 64, 20.0, 20.0);
    const ChainSpec chain = fully_td_chain();
    const double t1 = 0.4;
    const WaveGrid2D::State psi0 = grid.gaussian(0.5, 0.2, -0.4, 0.1, 1.0, 1.0);

    auto run_dt = [&](double dt) {
      WaveGrid2D::State p = psi0;
      grid.propagate_coupled(p, chain, 0.0, t1, dt);
      return p;
    };
    const WaveGrid2D::State ref = run_dt(2.5e-4);
    auto err = [&](const WaveGrid2D::State& p) {
      double s = 0;
      for (std::size_t i = 0; i < p.size(); ++i) s += std::norm(p[i] - ref[i]);
      return std::sqrt(s * grid.cell());
    };
    const double e_coarse = err(run_dt(4e-3));
    const double e_fine = err(run_dt(2e-3));
    const double ratio = e_coarse / e_fine;

    const Scenario s = random_scenario(2, 3);
    const Trajectory tu8 = integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, 1e-8);
    const Trajectory tv8 = integrate(s.chain, OscState{s.init_v, s.init_dv}, s.t0, s.t1, 1e-8);
    const Trajectory tu6 = integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, 1e-6);
    const Trajectory tv6 = integrate(s.chain, OscState{s.init_v, s.init_dv}, s.t0, s.t1, 1e-6);
    const double d6 = invariant_drift(tu6, tv6);
    const double d8 = invariant_drift(tu8, tv8);
    const double tol_gain = d6 / d8;

    report(10, ratio > 3.0 && ratio < 5.5 && tol_gain >= 10.0,
           "convergence: split-step error ratio " + num(ratio) +
               " (expect ~4), drift ratio across 100x tolerance " + num(tol_gain) +
               " (floor 10), drifts " + num(d6) + " -> " + num(d8));
  });

  std::printf("%d of 10 criteria failed, %.1f s total\n", failures,
              seconds_since(t_suite));
  return failures;
}
