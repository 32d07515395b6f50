// Command-line front end: scenario-driven runs of the oscillator-chain
// solvers with CSV/JSON artifacts.  All outputs are deterministic functions
// of the inputs; manifests record every effective tolerance so a run
// directory is self-describing.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdosc/classical.hpp"
#include "tdosc/ermakov.hpp"
#include "tdosc/gaussian.hpp"
#include "tdosc/grid2d.hpp"
#include "tdosc/pipeline.hpp"
#include "tdosc/scenario.hpp"

namespace fs = std::filesystem;
using namespace tdosc;

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir;
  double tol = 0;       // 0 keeps the scenario's ode_tol
  double dt = 0;        // 0 keeps the scenario's grid dt
  std::size_t grid_n = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t parallel = 1;
  bool snapshot = false;
};

Scenario load_scenario(const CommonArgs& a, std::size_t seed_sites = 2) {
  Scenario s;
  if (!a.scenario_path.empty()) {
    std::ifstream in(a.scenario_path);
    if (!in) throw std::invalid_argument("cannot open scenario file: " + a.scenario_path);
    json j = json::parse(in);
    s = Scenario::from_json(j);
  } else if (a.seed_set) {
    s = random_scenario(a.seed, seed_sites);
  } else {
    throw std::invalid_argument("either --scenario or --seed is required");
  }
  if (a.tol > 0) s.ode_tol = a.tol;
  if (a.dt > 0) s.grid.dt = a.dt;
  if (a.grid_n > 0) s.grid.n = a.grid_n;
  s.validate();
  return s;
}

fs::path run_dir(const CommonArgs& a, const Scenario& s, const std::string& sub) {
  std::string root = a.out_dir;
  if (root.empty()) {
    if (const char* env = std::getenv("TDOSC_OUT_ROOT")) root = env;
  }
  if (root.empty()) root = "runs";
  fs::path dir = fs::path(root) / s.name / sub;
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

void write_manifest(const fs::path& dir, json manifest) {
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

json base_manifest(const std::string& command, const Scenario& s) {
  json m;
  m["command"] = command;
  m["scenario"] = s.to_json();
  m["outputs"] = json::array();
  return m;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const CommonArgs& a) {
  const Scenario s = load_scenario(a);
  const fs::path dir = run_dir(a, s, "simulate");

  const Trajectory tu =
      integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);
  const Trajectory tv = integrate(s.chain, OscState{s.v0(), s.dv0()}, s.t0, s.t1, s.ode_tol);

  {
    std::ofstream out(dir / "trajectory_u.csv", std::ios::binary);
    tu.to_csv(out);
  }
  {
    std::ofstream out(dir / "trajectory_v.csv", std::ios::binary);
    tv.to_csv(out);
  }

  json m = base_manifest("simulate", s);
  m["outputs"] = {"trajectory_u.csv", "trajectory_v.csv"};
  m["steps_u"] = tu.node_times().size() - 1;
  m["steps_v"] = tv.node_times().size() - 1;
  write_manifest(dir, m);
  return 0;
}

// -------------------------------------------------------------- invariants

int cmd_invariants(const CommonArgs& a) {
  const Scenario s = load_scenario(a);
  const fs::path dir = run_dir(a, s, "invariants");

  const Trajectory tu =
      integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);
  const Trajectory tv = integrate(s.chain, OscState{s.v0(), s.dv0()}, s.t0, s.t1, s.ode_tol);

  const std::vector<double> ts = detail::merged_samples(tu, tv);
  std::string csv = "t,g_total,drift\n";
  const double g0 = invariant_classical(tu, tv, ts.front());
  const double scale = std::max(1.0, std::abs(g0));
  double max_drift = 0;
  for (double t : ts) {
    const double g = invariant_classical(tu, tv, t);
    const double d = std::abs(g - g0) / scale;
    max_drift = std::max(max_drift, d);
    csv += csv::fmt(t) + "," + csv::fmt(g) + "," + csv::fmt(d) + "\n";
  }
  write_file(dir / "invariant.csv", csv);

  json m = base_manifest("invariants", s);
  m["outputs"] = {"invariant.csv"};
  m["g0"] = g0;
  m["max_relative_drift"] = max_drift;

  if (s.chain.n == 2) {
    const PairInvariantReport rep = pair_invariants(tu, tv);
    std::ostringstream pcsv;
    rep.to_csv(pcsv);
    write_file(dir / "pair_invariants.csv", pcsv.str());
    m["outputs"].push_back("pair_invariants.csv");
    m["pair_sum_drift"] = rep.sum_drift();
    m["pair_component_variation"] = rep.component_variation();
  }
  write_manifest(dir, m);
  return 0;
}

// ----------------------------------------------------------------- ermakov

int cmd_ermakov(const CommonArgs& a) {
  // Seeded scenarios are generated single-site here; the decomposition has no
  // coupled analog.
  const Scenario s = load_scenario(a, 1);
  if (s.chain.n != 1)
    throw std::invalid_argument("ermakov requires a single-oscillator scenario");
  const fs::path dir = run_dir(a, s, "ermakov");

  const Trajectory tu =
      integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);
  const Trajectory tv = integrate(s.chain, OscState{s.v0(), s.dv0()}, s.t0, s.t1, s.ode_tol);
  const AmplitudePhase ap = rho_from_pair(tu, tv);

  std::string csv = "t,rho,rho_dot,theta\n";
  const double span = ap.t1() - ap.t0();
  const int samples = 400;
  for (int i = 0; i <= samples; ++i) {
    const double t = ap.t0() + span * static_cast<double>(i) / samples;
    csv += csv::fmt(t) + "," + csv::fmt(ap.rho(t)) + "," + csv::fmt(ap.rho_dot(t)) + "," +
           csv::fmt(ap.theta(t)) + "\n";
  }
  write_file(dir / "amplitude_phase.csv", csv);

  const double residual = ermakov_residual(ap, s.chain.omega_sq[0]);

  // Lewis invariant along an independent physical trajectory started from
  // the packet parameters.
  const Trajectory tx = integrate(s.chain, OscState{{s.packet.x0}, {s.packet.px0}}, s.t0,
                                  s.t1, s.ode_tol);
  std::string lcsv = "t,lewis\n";
  double l0 = 0, lmax_dev = 0;
  bool first = true;
  for (double t : tx.node_times()) {
    if (t < ap.t0() || t > ap.t1()) continue;
    const auto st = tx.at(t);
    const double lv = lewis_value(ap, st.u[0], st.du[0], t);
    if (first) {
      l0 = lv;
      first = false;
    }
    lmax_dev = std::max(lmax_dev, std::abs(lv - l0) / std::max(1.0, std::abs(l0)));
    lcsv += csv::fmt(t) + "," + csv::fmt(lv) + "\n";
  }
  write_file(dir / "lewis.csv", lcsv);

  json m = base_manifest("ermakov", s);
  m["outputs"] = {"amplitude_phase.csv", "lewis.csv"};
  m["wronskian"] = ap.wronskian();
  m["ermakov_residual"] = residual;
  m["lewis_value"] = l0;
  m["lewis_drift"] = lmax_dev;
  write_manifest(dir, m);
  return 0;
}

// ---------------------------------------------------------------- gaussian

int cmd_gaussian(const CommonArgs& a) {
  const Scenario s = load_scenario(a);
  const fs::path dir = run_dir(a, s, "gaussian");

  const MomentState init = MomentState::coherent(s.chain.n, s.init_u, s.init_du);
  const MomentEvolution ev = evolve_moments(s.chain, init, s.t0, s.t1, s.ode_tol);
  const Trajectory tu =
      integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);

  {
    std::ofstream out(dir / "moments.csv", std::ios::binary);
    ev.to_csv(out);
  }

  std::string gcsv = "t,re_g,im_g,gg_dagger\n";
  std::complex<double> g_first;
  double gg_first = 0, g_dev = 0, gg_dev = 0, min_eig = 0;
  bool first = true;
  for (double t : ev.node_times()) {
    const MomentState ms = ev.at(t);
    const LinearForm form = g_form_from_solution(tu, t);
    const std::complex<double> g = expect_g(form, ms);
    const double gg = expect_gg_dagger(form, ms);
    min_eig = std::min(min_eig, ms.min_uncertainty_eigenvalue());
    if (first) {
      g_first = g;
      gg_first = gg;
      first = false;
    }
    g_dev = std::max(g_dev, std::abs(g - g_first));
    gg_dev = std::max(gg_dev, std::abs(gg - gg_first));
    gcsv += csv::fmt(t) + "," + csv::fmt(g.real()) + "," + csv::fmt(g.imag()) + "," +
            csv::fmt(gg) + "\n";
  }
  write_file(dir / "g_report.csv", gcsv);

  const double sdef = symplectic_defect(ev.fundamental(s.t1));

  json m = base_manifest("gaussian", s);
  m["outputs"] = {"moments.csv", "g_report.csv"};
  m["g_initial"] = {g_first.real(), g_first.imag()};
  m["gg_dagger_initial"] = gg_first;
  m["g_max_drift"] = g_dev;
  m["gg_dagger_max_drift"] = gg_dev;
  m["symplectic_defect_final"] = sdef;
  m["min_uncertainty_eigenvalue"] = min_eig;
  write_manifest(dir, m);
  return 0;
}

// ---------------------------------------------------------------- oracle2d

int cmd_oracle2d(const CommonArgs& a) {
  const Scenario s = load_scenario(a);
  if (s.chain.n != 2) throw std::invalid_argument("oracle2d requires a two-oscillator scenario");
  const fs::path dir = run_dir(a, s, "oracle2d");

  const WaveGrid2D grid(s.grid.n, s.grid.n, s.grid.length, s.grid.length);
  WaveGrid2D::State psi = grid.gaussian(s.packet.x0, s.packet.px0, s.packet.y0,
                                        s.packet.py0, s.packet.sx, s.packet.sy);

  const MomentState init = grid.moments(psi);
  const MomentEvolution ev = evolve_moments(s.chain, init, s.t0, s.t1, s.ode_tol);
  const Trajectory tu =
      integrate(s.chain, OscState{s.init_u, s.init_du}, s.t0, s.t1, s.ode_tol);

  const int segments = 20;
  std::string csv =
      "t,mean_x,mean_y,mean_px,mean_py,g2,mean_dev,cov_dev\n";
  double max_mean_dev = 0, max_cov_dev = 0, g2_drift = 0, boundary = 0;
  std::complex<double> g2_0;
  for (int k = 0; k <= segments; ++k) {
    const double t = s.t0 + (s.t1 - s.t0) * static_cast<double>(k) / segments;
    if (k > 0) {
      const double tp = s.t0 + (s.t1 - s.t0) * static_cast<double>(k - 1) / segments;
      const PropagationStats st = grid.propagate_coupled(psi, s.chain, tp, t, s.grid.dt);
      boundary = std::max(boundary, st.boundary_fraction);
    }
    const MomentState mg = grid.moments(psi);
    const MomentState mm = ev.at(t);
    const double mdev = (mg.mean - mm.mean).cwiseAbs().maxCoeff();
    const double cdev = (mg.cov - mm.cov).cwiseAbs().maxCoeff();
    max_mean_dev = std::max(max_mean_dev, mdev);
    max_cov_dev = std::max(max_cov_dev, cdev);
    const auto ust = tu.at(t);
    const std::complex<double> g2 =
        grid.expect_g2(psi, ust.u[0], ust.du[0], ust.u[1], ust.du[1]);
    if (k == 0) g2_0 = g2;
    g2_drift = std::max(g2_drift, std::abs(g2 - g2_0));
    csv += csv::fmt(t) + "," + csv::fmt(mg.mean[0]) + "," + csv::fmt(mg.mean[1]) + "," +
           csv::fmt(mg.mean[2]) + "," + csv::fmt(mg.mean[3]) + "," + csv::fmt(g2.real()) +
           "," + csv::fmt(mdev) + "," + csv::fmt(cdev) + "\n";
  }
  write_file(dir / "grid_moments.csv", csv);

  json m = base_manifest("oracle2d", s);
  m["outputs"] = {"grid_moments.csv"};
  if (a.snapshot) {
    std::string snap = "x,y,re_psi,im_psi\n";
    snap.reserve(psi.size() * 64);
    for (std::size_t ix = 0; ix < grid.nx(); ++ix)
      for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
        const auto v = psi[ix * grid.ny() + iy];
        snap += csv::fmt(grid.xs()[ix]) + "," + csv::fmt(grid.ys()[iy]) + "," +
                csv::fmt(v.real()) + "," + csv::fmt(v.imag()) + "\n";
      }
    write_file(dir / "psi_final.csv", snap);
    m["outputs"].push_back("psi_final.csv");
  }
  m["max_mean_deviation"] = max_mean_dev;
  m["max_cov_deviation"] = max_cov_dev;
  m["g2_drift"] = g2_drift;
  m["boundary_fraction"] = boundary;
  write_manifest(dir, m);
  return 0;
}

// ---------------------------------------------------------------- pipeline

int cmd_pipeline(const CommonArgs& a) {
  const Scenario s = load_scenario(a);
  if (s.chain.n != 2) throw std::invalid_argument("pipeline requires a two-oscillator scenario");
  const fs::path dir = run_dir(a, s, "pipeline");

  const WaveGrid2D grid(s.grid.n, s.grid.n, s.grid.length, s.grid.length);
  const WaveGrid2D::State psi0 = grid.gaussian(s.packet.x0, s.packet.px0, s.packet.y0,
                                               s.packet.py0, s.packet.sx, s.packet.sy);

  PipelineOptions po;
  po.dt = s.grid.dt;
  if (a.tol > 0) po.ode_tol = a.tol;
  po.parallel = a.parallel;
  PipelineResult res = pipeline_solve(grid, s.chain, psi0, s.t0, s.t1, po);

  WaveGrid2D::State oracle = psi0;
  const PropagationStats ost = grid.propagate_coupled(oracle, s.chain, s.t0, s.t1, s.grid.dt);
  const double fid = grid.fidelity(res.psi, oracle);

  json rep = res.report.to_json();
  rep["fidelity_vs_oracle"] = fid;
  rep["oracle_boundary_fraction"] = ost.boundary_fraction;
  write_file(dir / "pipeline_report.json", rep.dump(2) + "\n");

  json m = base_manifest("pipeline", s);
  m["outputs"] = {"pipeline_report.json"};
  m["fidelity_vs_oracle"] = fid;
  m["segments"] = res.report.segments.size();
  write_manifest(dir, m);
  return 0;
}

// ------------------------------------------------------------------ report

int cmd_report(const CommonArgs& a) {
  std::string root = a.out_dir;
  if (root.empty()) {
    if (const char* env = std::getenv("TDOSC_OUT_ROOT")) root = env;
  }
  if (root.empty()) root = "runs";
  if (!fs::exists(root)) throw std::invalid_argument("output root does not exist: " + root);

  std::vector<fs::path> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "manifest.json")
      manifests.push_back(entry.path());
  std::sort(manifests.begin(), manifests.end());

  json rep;
  rep["runs"] = json::array();
  for (const auto& p : manifests) {
    std::ifstream in(p);
    json m = json::parse(in);
    json entry;
    entry["path"] = fs::relative(p, root).generic_string();
    entry["manifest"] = m;
    rep["runs"].push_back(entry);
  }
  write_file(fs::path(root) / "report.json", rep.dump(2) + "\n");
  return 0;
}

void add_common(CLI::App* sub, CommonArgs& a, bool needs_scenario = true) {
  if (needs_scenario) {
    sub->add_option("--scenario", a.scenario_path, "scenario JSON file");
    sub->add_option("--seed", a.seed,
                    "generate a random scenario (two sites; ermakov uses one)")
        ->each([&a](const std::string&) { a.seed_set = true; });
  }
  sub->add_option("--out", a.out_dir, "output root (default $TDOSC_OUT_ROOT or ./runs)");
  sub->add_option("--tol", a.tol, "override ODE tolerance");
  sub->add_option("--dt", a.dt, "override split-step size");
  sub->add_option("--grid", a.grid_n, "override grid size per axis");
  sub->add_option("--parallel", a.parallel, "worker threads where supported");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled time-dependent oscillator laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const CommonArgs&) = nullptr;

  auto* simulate = app.add_subcommand("simulate", "classical trajectories");
  add_common(simulate, args);
  simulate->callback([&] { handler = cmd_simulate; });

  auto* invariants = app.add_subcommand("invariants", "conserved-quantity drift reports");
  add_common(invariants, args);
  invariants->callback([&] { handler = cmd_invariants; });

  auto* ermakov = app.add_subcommand("ermakov", "amplitude-phase decomposition reports");
  add_common(ermakov, args);
  ermakov->callback([&] { handler = cmd_ermakov; });

  auto* gaussian = app.add_subcommand("gaussian", "moment-level quantum runs");
  add_common(gaussian, args);
  gaussian->callback([&] { handler = cmd_gaussian; });

  auto* oracle2d = app.add_subcommand("oracle2d", "direct 2D grid propagation");
  add_common(oracle2d, args);
  oracle2d->add_flag("--snapshot", args.snapshot, "write the final wavefunction CSV");
  oracle2d->callback([&] { handler = cmd_oracle2d; });

  auto* pipeline = app.add_subcommand("pipeline", "transformation-chain solve with oracle check");
  add_common(pipeline, args);
  pipeline->callback([&] { handler = cmd_pipeline; });

  auto* report = app.add_subcommand("report", "aggregate manifests under the output root");
  add_common(report, args, false);
  report->callback([&] { handler = cmd_report; });

  CLI11_PARSE(app, argc, argv);

  try {
    return handler(args);
  } catch (const IntegrationFailure& e) {
    json err{{"error", "numerical"}, {"detail", e.what()}, {"t", e.where()}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    json err{{"error", "validation"}, {"detail", e.what()}};
    std::cerr << err.dump(2) << "\n";
    return 1;
  } catch (const json::exception& e) {
    json err{{"error", "validation"}, {"detail", e.what()}};
    std::cerr << err.dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err{{"error", "numerical"}, {"detail", e.what()}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  }
}
