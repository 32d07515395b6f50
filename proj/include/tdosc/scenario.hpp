#pragma once

// Scenario files describe a full run: the chain, classical initial data,
// the time window, tolerances, and grid/packet parameters for the quantum
// stages.  Randomized scenarios come from a hand-rolled 64-bit generator so
// that a seed produces identical scenarios on every platform and standard
// library.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdosc/time_function.hpp"

namespace tdosc {

struct GridParams {
  std::size_t n = 256;
  double length = 32.0;
  double dt = 1e-3;
};

struct PacketParams {
  double x0 = 0, y0 = 0, px0 = 0, py0 = 0;
  double sx = 1.0, sy = 1.0;
};

struct Scenario {
  std::string name;
  ChainSpec chain;
  std::vector<double> init_u, init_du;  // first classical solution
  std::vector<double> init_v, init_dv;  // independent partner, defaulted if empty
  double t0 = 0, t1 = 10;
  double ode_tol = 1e-10;
  GridParams grid;
  PacketParams packet;

  void validate() const {
    chain.validate();
    if (name.empty()) throw std::invalid_argument("scenario: empty name");
    if (init_u.size() != chain.n || init_du.size() != chain.n)
      throw std::invalid_argument("scenario: initial data size mismatch");
    if (!init_v.empty() && (init_v.size() != chain.n || init_dv.size() != chain.n))
      throw std::invalid_argument("scenario: partner initial data size mismatch");
    if (!(t1 > t0)) throw std::invalid_argument("scenario: empty window");
    if (!(ode_tol >= 1e-14 && ode_tol <= 1e-3))
      throw std::invalid_argument("scenario: ode_tol out of range");
    if (!(grid.dt > 0) || !(grid.length > 0) || grid.n < 8)
      throw std::invalid_argument("scenario: bad grid parameters");
    if (!(packet.sx > 0) || !(packet.sy > 0))
      throw std::invalid_argument("scenario: bad packet widths");
  }

  // Partner solution initial data; the default (v = 0, v' = 1) is
  // independent of any u with u(t0) != 0.
  std::vector<double> v0() const {
    return init_v.empty() ? std::vector<double>(chain.n, 0.0) : init_v;
  }
  std::vector<double> dv0() const {
    return init_dv.empty() ? std::vector<double>(chain.n, 1.0) : init_dv;
  }

  json to_json() const {
    json j;
    j["name"] = name;
    j["chain"] = chain.to_json();
    j["window"] = {t0, t1};
    j["ode_tol"] = ode_tol;
    j["init"] = {{"u", init_u}, {"du", init_du}};
    if (!init_v.empty()) {
      j["init"]["v"] = init_v;
      j["init"]["dv"] = init_dv;
    }
    j["grid"] = {{"n", grid.n}, {"length", grid.length}, {"dt", grid.dt}};
    j["packet"] = {{"x0", packet.x0},   {"y0", packet.y0}, {"px0", packet.px0},
                   {"py0", packet.py0}, {"sx", packet.sx}, {"sy", packet.sy}};
    return j;
  }

  static Scenario from_json(const json& j) {
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.chain = ChainSpec::from_json(j.at("chain"));
    s.t0 = j.at("window").at(0).get<double>();
    s.t1 = j.at("window").at(1).get<double>();
    s.ode_tol = j.value("ode_tol", 1e-10);
    s.init_u = j.at("init").at("u").get<std::vector<double>>();
    s.init_du = j.at("init").at("du").get<std::vector<double>>();
    if (j.at("init").contains("v")) {
      s.init_v = j.at("init").at("v").get<std::vector<double>>();
      s.init_dv = j.at("init").at("dv").get<std::vector<double>>();
    }
    if (j.contains("grid")) {
      s.grid.n = j.at("grid").value("n", std::size_t{256});
      s.grid.length = j.at("grid").value("length", 32.0);
      s.grid.dt = j.at("grid").value("dt", 1e-3);
    }
    if (j.contains("packet")) {
      const auto& p = j.at("packet");
      s.packet.x0 = p.value("x0", 0.0);
      s.packet.y0 = p.value("y0", 0.0);
      s.packet.px0 = p.value("px0", 0.0);
      s.packet.py0 = p.value("py0", 0.0);
      s.packet.sx = p.value("sx", 1.0);
      s.packet.sy = p.value("sy", 1.0);
    }
    s.validate();
    return s;
  }
};

namespace detail {

struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1) with 53 significant bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

}  // namespace detail

// Bounded harmonic-sum scenario: every frequency-squared stays within
// [0.7, 3.7] and every coupling within [-0.5, 0.5], keeping grids and
// integrators in their comfortable regime.
inline Scenario random_scenario(std::uint64_t seed, std::size_t n) {
  detail::SplitMix64 g{seed * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL * n};
  Scenario s;
  s.name = "random-" + std::to_string(seed) + "-n" + std::to_string(n);
  s.chain.n = n;
  const double two_pi = 2.0 * 3.14159265358979323846;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = g.range(1.2, 3.2);
    const double b = g.range(-0.5, 0.5);
    const double w = g.range(0.3, 2.0);
    const double ph = g.range(0.0, two_pi);
    s.chain.omega_sq.push_back(TimeFunction::harmonic(a, b, w, ph));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double c = g.range(-0.3, 0.3);
    const double d = g.range(-0.2, 0.2);
    const double w = g.range(0.3, 2.0);
    const double ph = g.range(0.0, two_pi);
    s.chain.eta.push_back(TimeFunction::harmonic(c, d, w, ph));
  }
  for (std::size_t i = 0; i < n; ++i) s.init_u.push_back(g.range(-1.0, 1.0));
  for (std::size_t i = 0; i < n; ++i) s.init_du.push_back(g.range(-1.0, 1.0));
  for (std::size_t i = 0; i < n; ++i) s.init_v.push_back(g.range(-1.0, 1.0));
  for (std::size_t i = 0; i < n; ++i) s.init_dv.push_back(g.range(-1.0, 1.0));
  s.t0 = 0;
  s.t1 = 20;
  s.ode_tol = 1e-10;
  s.packet.x0 = g.range(-1.5, 1.5);
  s.packet.y0 = g.range(-1.5, 1.5);
  s.packet.px0 = g.range(-1.0, 1.0);
  s.packet.py0 = g.range(-1.0, 1.0);
  return s;
}

}  // namespace tdosc
