#pragma once

// Moment-level propagation of Gaussian states under the quadratic chain
// Hamiltonian.  Means follow the classical flow; covariances transform by
// congruence with the fundamental symplectic matrix S(t).  The linear-form
// observable G = sum_j a_j R_j (R = (x_1..x_n, p_1..p_n)) carries the
// chain's conserved quantity when built from a solution trajectory via
// a_{x_i} = -u_i', a_{p_i} = u_i.

#include <complex>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tdosc/classical.hpp"
#include "tdosc/ermakov.hpp"

namespace tdosc {

// Canonical ordering (x_1..x_n, p_1..p_n); [R_j, R_k] = i J_{jk}.
inline Eigen::MatrixXd symplectic_form(std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * ni, 2 * ni);
  J.topRightCorner(ni, ni).setIdentity();
  J.bottomLeftCorner(ni, ni) = -Eigen::MatrixXd::Identity(ni, ni);
  return J;
}

inline double symplectic_defect(const Eigen::MatrixXd& S) {
  const std::size_t n = static_cast<std::size_t>(S.rows()) / 2;
  const Eigen::MatrixXd J = symplectic_form(n);
  return (S * J * S.transpose() - J).cwiseAbs().maxCoeff();
}

struct MomentState {
  std::size_t n = 0;
  Eigen::VectorXd mean;  // (x_1..x_n, p_1..p_n)
  Eigen::MatrixXd cov;   // symmetrized second central moments

  // Smallest eigenvalue of cov + (i/2) J; physical states give >= 0 up to
  // numerical noise.
  double min_uncertainty_eigenvalue() const {
    const Eigen::MatrixXcd H =
        cov.cast<std::complex<double>>() +
        std::complex<double>(0.0, 0.5) * symplectic_form(n).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  void validate() const {
    const auto d = static_cast<Eigen::Index>(2 * n);
    if (n < 1 || mean.size() != d || cov.rows() != d || cov.cols() != d)
      throw std::invalid_argument("moment state: inconsistent dimensions");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("moment state: covariance not symmetric");
    if (min_uncertainty_eigenvalue() < -1e-10)
      throw std::invalid_argument("moment state: uncertainty bound violated");
  }

  static MomentState vacuum(std::size_t n) {
    const auto d = static_cast<Eigen::Index>(2 * n);
    return {n, Eigen::VectorXd::Zero(d), 0.5 * Eigen::MatrixXd::Identity(d, d)};
  }

  // Vacuum covariance displaced to the given phase-space point.
  static MomentState coherent(std::size_t n, std::span<const double> x0,
                              std::span<const double> p0) {
    MomentState s = vacuum(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < x0.size()) s.mean[static_cast<Eigen::Index>(i)] = x0[i];
      if (i < p0.size()) s.mean[static_cast<Eigen::Index>(n + i)] = p0[i];
    }
    return s;
  }
};

struct LinearForm {
  std::size_t n = 0;
  Eigen::VectorXcd a;  // coefficients over (x_1..x_n, p_1..p_n)
};

// Form whose expectation is conserved: a_{x_i} = -u_i'(t), a_{p_i} = u_i(t).
// Depends only on the solution trajectory, never on the coupling directly.
inline LinearForm g_form_from_solution(const Trajectory& u, double t) {
  const std::size_t n = u.spec().n;
  LinearForm form{n, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(2 * n))};
  const auto y = u.at(t);
  for (std::size_t i = 0; i < n; ++i) {
    form.a[static_cast<Eigen::Index>(i)] = -y.du[i];
    form.a[static_cast<Eigen::Index>(n + i)] = y.u[i];
  }
  return form;
}

// Same construction from amplitude-phase decompositions of decoupled
// oscillators: u_i = rho_i exp(-i theta_i), concatenated block-wise.
inline LinearForm g_form_from_phases(std::span<const AmplitudePhase> phases, double t) {
  const std::size_t n = phases.size();
  LinearForm form{n, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(2 * n))};
  for (std::size_t i = 0; i < n; ++i) {
    form.a[static_cast<Eigen::Index>(i)] = -phases[i].du_complex(t);
    form.a[static_cast<Eigen::Index>(n + i)] = phases[i].u_complex(t);
  }
  return form;
}

inline std::complex<double> expect_g(const LinearForm& form, const MomentState& s) {
  if (form.n != s.n) throw std::invalid_argument("expect_g: dimension mismatch");
  return form.a.transpose() * s.mean.cast<std::complex<double>>();
}

// <G G^dagger> = sum_jk a_j conj(a_k) [cov_jk + mean_j mean_k + (i/2) J_jk].
// The result must be real and nonnegative up to tolerance; a larger imaginary
// residue signals an internal inconsistency.
inline double expect_gg_dagger(const LinearForm& form, const MomentState& s) {
  if (form.n != s.n) throw std::invalid_argument("expect_gg_dagger: dimension mismatch");
  const Eigen::MatrixXcd M =
      (s.cov + s.mean * s.mean.transpose()).cast<std::complex<double>>() +
      std::complex<double>(0.0, 0.5) * symplectic_form(s.n).cast<std::complex<double>>();
  const std::complex<double> val = form.a.transpose() * M * form.a.conjugate();
  const double scale = std::max(1.0, std::abs(val));
  if (std::abs(val.imag()) > 1e-10 * scale)
    throw std::runtime_error("expect_gg_dagger: non-real result, inconsistent inputs");
  return val.real();
}

// Var(G) = <G G^dagger> - |<G>|^2.
inline double variance_g(const LinearForm& form, const MomentState& s) {
  const std::complex<double> g = expect_g(form, s);
  return expect_gg_dagger(form, s) - std::norm(g);
}

// Fundamental-matrix evolution of Gaussian moments.
class MomentEvolution {
 public:
  MomentEvolution(ChainSpec spec, MomentState init, DenseSolution sol)
      : spec_(std::move(spec)), init_(std::move(init)), sol_(std::move(sol)) {}

  const ChainSpec& spec() const { return spec_; }
  const MomentState& initial() const { return init_; }
  const std::vector<double>& node_times() const { return sol_.node_times(); }
  double t0() const { return sol_.t_front(); }
  double t1() const { return sol_.t_back(); }

  Eigen::MatrixXd fundamental(double t) const {
    const auto d = static_cast<Eigen::Index>(2 * spec_.n);
    const std::vector<double> flat = sol_.eval(t);
    return Eigen::Map<const Eigen::MatrixXd>(flat.data(), d, d);
  }

  MomentState at(double t) const {
    const Eigen::MatrixXd S = fundamental(t);
    MomentState out;
    out.n = init_.n;
    out.mean = S * init_.mean;
    const Eigen::MatrixXd c = S * init_.cov * S.transpose();
    out.cov = 0.5 * (c + c.transpose());  // keep exact symmetry
    return out;
  }

  // CSV rows: t,mean_1..mean_2n,cov upper triangle row-major.
  void to_csv(std::ostream& os) const {
    const auto d = static_cast<Eigen::Index>(2 * spec_.n);
    os << "t";
    for (Eigen::Index i = 0; i < d; ++i) os << ",mean_" << (i + 1);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i; j < d; ++j) os << ",cov_" << (i + 1) << "_" << (j + 1);
    os << "\n";
    for (double t : sol_.node_times()) {
      const MomentState s = at(t);
      os << csv::fmt(t);
      for (Eigen::Index i = 0; i < d; ++i) os << "," << csv::fmt(s.mean[i]);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) os << "," << csv::fmt(s.cov(i, j));
      os << "\n";
    }
  }

 private:
  ChainSpec spec_;
  MomentState init_;
  DenseSolution sol_;  // fundamental matrix, column-major flattened
};

inline MomentEvolution evolve_moments(const ChainSpec& spec, const MomentState& init,
                                      double t0, double t1, double tol) {
  spec.validate();
  init.validate();
  if (init.n != spec.n) throw std::invalid_argument("evolve_moments: dimension mismatch");
  const std::size_t n = spec.n;
  const std::size_t d = 2 * n;

  std::vector<double> wsq(n), eta(n > 0 ? n - 1 : 0);
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    for (std::size_t i = 0; i < n; ++i) wsq[i] = spec.omega_sq[i](t);
    for (std::size_t i = 0; i + 1 < n; ++i) eta[i] = spec.eta[i](t);
    for (std::size_t col = 0; col < d; ++col) {
      const double* yc = y.data() + col * d;
      double* dc = dy.data() + col * d;
      for (std::size_t i = 0; i < n; ++i) dc[i] = yc[n + i];
      for (std::size_t i = 0; i < n; ++i) {
        double acc = -wsq[i] * yc[i];
        if (i > 0) acc -= eta[i - 1] * yc[i - 1];
        if (i + 1 < n) acc -= eta[i] * yc[i + 1];
        dc[n + i] = acc;
      }
    }
  };

  std::vector<double> s0(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) s0[i * d + i] = 1.0;  // identity, column-major
  OdeOptions opt;
  opt.tol = tol;
  DenseSolution sol = integrate_dopri5(rhs, s0, t0, t1, opt);
  return MomentEvolution(spec, init, std::move(sol));
}

}  // namespace tdosc
