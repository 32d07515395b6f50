#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "support/oracles.hpp"
#include "tdosc/grid1d.hpp"
#include "tdosc/ode.hpp"

using namespace tdosc;
using Catch::Matchers::WithinAbs;

namespace {
constexpr double kPi = 3.14159265358979323846;

ReducedCoeffs harmonic_coeffs() {
  ReducedCoeffs c;
  c.quad = [](double) { return 0.5; };  // H = p^2/2 + y^2/2
  return c;
}
}  // namespace

TEST_CASE("grid construction rules") {
  REQUIRE_THROWS_AS(WaveGrid1D(100, 16.0), std::invalid_argument);
  REQUIRE_THROWS_AS(WaveGrid1D(4, 16.0), std::invalid_argument);
  REQUIRE_THROWS_AS(WaveGrid1D(64, -1.0), std::invalid_argument);
  const WaveGrid1D g(64, 16.0);
  REQUIRE_THAT(g.coords().front(), WithinAbs(-8.0, 1e-14));
  REQUIRE_THAT(g.spacing(), WithinAbs(0.25, 1e-14));
}

TEST_CASE("gaussian packet moments") {
  const WaveGrid1D g(512, 32.0);
  SECTION("centered packet") {
    const auto psi = g.gaussian(0.0, 0.0, 1.0);
    REQUIRE_THAT(g.norm_sq(psi), WithinAbs(1.0, 1e-12));
    const auto m = g.moments(psi);
    REQUIRE_THAT(m.y, WithinAbs(0.0, 1e-10));
    REQUIRE_THAT(m.p, WithinAbs(0.0, 1e-10));
    REQUIRE_THAT(m.var_y, WithinAbs(0.5, 1e-8));
    REQUIRE_THAT(m.var_p, WithinAbs(0.5, 1e-8));
    REQUIRE_THAT(m.cov_yp, WithinAbs(0.0, 1e-10));
  }
  SECTION("boosted displaced packet") {
    const auto psi = g.gaussian(1.5, 2.0, 1.0);
    const auto m = g.moments(psi);
    REQUIRE_THAT(m.y, WithinAbs(1.5, 1e-9));
    REQUIRE_THAT(m.p, WithinAbs(2.0, 1e-8));
  }
}

TEST_CASE("variance of the square position on the reference gaussian") {
  // <y^2> of pi^{-1/4} e^{-y^2/2} is 1/2.
  const WaveGrid1D g(256, 24.0);
  const auto psi = g.gaussian(0.0, 0.0, 1.0);
  const auto m = g.moments(psi);
  REQUIRE_THAT(m.var_y + m.y * m.y, WithinAbs(0.5, 1e-8));
}

TEST_CASE("fidelity reference values") {
  const WaveGrid1D g(512, 32.0);
  const auto a = g.gaussian(0.0, 0.0, 1.0);
  SECTION("identical states") { REQUIRE_THAT(g.fidelity(a, a), WithinAbs(1.0, 1e-12)); }
  SECTION("odd versus even states are orthogonal") {
    auto odd = a;
    for (std::size_t i = 0; i < odd.size(); ++i) odd[i] *= g.coords()[i];
    const double n = std::sqrt(g.norm_sq(odd));
    for (auto& z : odd) z /= n;
    REQUIRE_THAT(g.fidelity(a, odd), WithinAbs(0.0, 1e-10));
  }
  SECTION("displaced gaussians follow the closed-form overlap") {
    const double d = 1.3;
    const auto b = g.gaussian(d, 0.0, 1.0);
    const double closed = std::exp(-d * d / 4.0);
    // Independent check of the closed form by direct quadrature.
    double acc = 0;
    for (double y = -12.0; y <= 12.0; y += 1e-3)
      acc += std::exp(-y * y / 2.0 - (y - d) * (y - d) / 2.0) * 1e-3;
    acc /= std::sqrt(kPi);
    REQUIRE_THAT(closed, WithinAbs(acc, 1e-6));
    REQUIRE_THAT(g.fidelity(a, b), WithinAbs(closed, 1e-6));
  }
}

TEST_CASE("harmonic ground state is stationary") {
  const WaveGrid1D g(256, 24.0);
  auto psi = g.gaussian(0.0, 0.0, 1.0);
  const auto initial = psi;
  const auto stats = g.propagate(psi, harmonic_coeffs(), 0.0, 2.0 * kPi, 1e-3);
  REQUIRE(stats.steps == static_cast<std::size_t>(std::ceil(2.0 * kPi / 1e-3)));
  REQUIRE_THAT(g.norm_sq(psi), WithinAbs(1.0, 1e-10));
  REQUIRE(g.fidelity(psi, initial) > 1.0 - 1e-8);
}

TEST_CASE("free packet spreads ballistically") {
  const WaveGrid1D g(512, 64.0);
  auto psi = g.gaussian(0.0, 0.0, 1.0);
  const double v0 = g.moments(psi).var_y;
  ReducedCoeffs free_particle;  // all defaults: H = p^2/2
  const double t = 3.0;
  g.propagate(psi, free_particle, 0.0, t, 1e-3);
  const double expected = v0 + t * t / (4.0 * v0);
  REQUIRE_THAT(g.moments(psi).var_y, WithinAbs(expected, 1e-6));
}

TEST_CASE("norm is conserved to near round-off per step") {
  const WaveGrid1D g(256, 24.0);
  auto psi = g.gaussian(0.3, 0.5, 1.0);
  ReducedCoeffs c;
  c.inv_mass = [](double t) { return 1.0 + 0.2 * std::sin(t); };
  c.quad = [](double t) { return 0.4 + 0.1 * std::cos(2.0 * t); };
  for (int s = 0; s < 50; ++s) {
    g.propagate(psi, c, 0.01 * s, 0.01 * (s + 1), 0.01);
    REQUIRE_THAT(g.norm_sq(psi), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("momentum-linear term translates the packet") {
  // H = p^2/2 + k p shifts the group velocity by k.
  const WaveGrid1D g(512, 64.0);
  auto psi = g.gaussian(0.0, 0.0, 2.0);
  ReducedCoeffs c;
  c.lin_p = [](double) { return 1.25; };
  const double t = 2.0;
  g.propagate(psi, c, 0.0, t, 1e-3);
  REQUIRE_THAT(g.moments(psi).y, WithinAbs(1.25 * t, 1e-6));
}

TEST_CASE("c-number term contributes exactly a global phase") {
  const WaveGrid1D g(128, 16.0);
  auto plain = g.gaussian(0.0, 0.0, 1.0);
  auto phased = plain;
  ReducedCoeffs with_c = harmonic_coeffs();
  with_c.constant = [](double) { return 0.7; };
  const double t = 1.0;
  g.propagate(plain, harmonic_coeffs(), 0.0, t, 1e-3);
  g.propagate(phased, with_c, 0.0, t, 1e-3);
  const auto ov = g.overlap(phased, plain);
  REQUIRE_THAT(std::abs(ov), WithinAbs(1.0, 1e-10));
  // exp(-i c t) relative phase; overlap(phased, plain) = conj(factor).
  REQUIRE_THAT(std::arg(ov), WithinAbs(0.7 * t, 1e-8));
}

TEST_CASE("boundary guard aborts a runaway packet") {
  const WaveGrid1D g(128, 12.0);
  auto psi = g.gaussian(0.0, 4.0, 1.0);  // fast packet, small box
  ReducedCoeffs free_particle;
  REQUIRE_THROWS_AS(g.propagate(psi, free_particle, 0.0, 3.0, 1e-3), std::runtime_error);
}

TEST_CASE("resolution guard rejects too-coarse steps") {
  const WaveGrid1D g(128, 16.0);
  auto psi = g.gaussian(0.0, 0.0, 1.0);
  ReducedCoeffs c;
  c.quad = [](double) { return 400.0; };
  REQUIRE_THROWS_AS(g.propagate(psi, c, 0.0, 1.0, 0.01), std::runtime_error);
}

TEST_CASE("split step converges at second order") {
  const WaveGrid1D g(256, 32.0);
  ReducedCoeffs c;
  c.inv_mass = [](double t) { return 1.0 / (1.0 + 0.3 * std::sin(t)); };
  c.quad = [](double t) { return 0.5 + 0.2 * std::cos(2.0 * t); };
  const double t1 = 1.5;

  auto reference = g.gaussian(0.5, 0.0, 1.0);
  g.propagate(reference, c, 0.0, t1, 5e-5);

  auto run = [&](double dt) {
    auto psi = g.gaussian(0.5, 0.0, 1.0);
    g.propagate(psi, c, 0.0, t1, dt);
    double err = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) err += std::norm(psi[i] - reference[i]);
    return std::sqrt(err * g.spacing());
  };

  const double e1 = run(4e-3);
  const double e2 = run(2e-3);
  REQUIRE(e1 / e2 > 3.0);
  REQUIRE(e1 / e2 < 5.5);
}

TEST_CASE("lewis invariant of the reduced dynamics is flat on the grid") {
  // Time-dependent-mass oscillator H = p^2/(2 mu) + lam y^2.  A complex
  // classical solution w of d/dt(mu w') = -2 lam w provides the conserved
  // quadratic form <G G^+> with G = w p - mu w' y; the grid propagation must
  // keep it constant.
  auto mu = [](double t) { return 1.0 + 0.25 * std::sin(0.9 * t); };
  auto lam = [](double t) { return 0.5 + 0.15 * std::cos(1.3 * t); };

  OdeOptions opt;
  opt.tol = 1e-12;
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    // y = (u, v, pu, pv) with p = mu u'; u' = p/mu, p' = -2 lam u.
    dy[0] = y[2] / mu(t);
    dy[1] = y[3] / mu(t);
    dy[2] = -2.0 * lam(t) * y[0];
    dy[3] = -2.0 * lam(t) * y[1];
  };
  const double t1 = 4.0;
  const auto sol =
      integrate_dopri5(rhs, std::vector<double>{1.0, 0.0, 0.0, 1.0}, 0.0, t1, opt);

  const WaveGrid1D g(512, 48.0);
  auto psi = g.gaussian(0.8, -0.3, 1.2);
  ReducedCoeffs c;
  c.inv_mass = [&](double t) { return 1.0 / mu(t); };
  c.quad = lam;

  auto invariant = [&](double t) {
    const auto y = sol.eval(t);
    const std::complex<double> w(y[0], y[1]);
    const std::complex<double> mw(y[2], y[3]);  // mu w'
    const auto m = g.moments(psi);
    const double p2 = m.var_p + m.p * m.p;
    const double y2 = m.var_y + m.y * m.y;
    const double yp = m.cov_yp + m.y * m.p;
    const double wronskian = -std::imag(w * std::conj(mw));
    return std::norm(w) * p2 + std::norm(mw) * y2 -
           2.0 * std::real(w * std::conj(mw)) * yp + wronskian;
  };

  const double i0 = invariant(0.0);
  double worst = 0;
  const int segments = 8;
  for (int s = 0; s < segments; ++s) {
    const double ta = t1 * s / segments, tb = t1 * (s + 1) / segments;
    g.propagate(psi, c, ta, tb, 5e-4);
    worst = std::max(worst, std::abs(invariant(tb) - i0));
  }
  REQUIRE(i0 > 0.5);  // sanity: the form is a genuine positive invariant
  REQUIRE(worst < 1e-4);
}
