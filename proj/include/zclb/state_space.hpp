#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "zclb/affine.hpp"

namespace zclb {

// Exact one-step dynamics of the latent factor over an interval dt:
//   x_n = transition * x_{n-1} + eta_n,   eta_n ~ N(0, process_cov).
// Both matrices are diagonal (independent components).
struct FactorDynamics {
  Eigen::Matrix2d transition;
  Eigen::Matrix2d process_cov;
};

// Exact discrete-time OU moments: transition e^{-zeta dt} and conditional
// variance kappa^2 (1 - e^{-2 zeta dt}) / (2 zeta), written as
// kappa^2 dt H(2 zeta dt) so the zeta -> 0 limit (kappa^2 dt) is built in.
inline FactorDynamics factor_dynamics(const ModelParams& p, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("factor_dynamics: dt must be > 0, got " +
                                std::to_string(dt));
  p.validate();
  FactorDynamics d;
  d.transition.setZero();
  d.process_cov.setZero();
  const double k2 = p.kappa11 * p.kappa11;
  d.transition(0, 0) = std::exp(-p.zeta1_r * dt);
  d.transition(1, 1) = std::exp(-p.zeta1_lambda * dt);
  d.process_cov(0, 0) = k2 * dt * h_func(2.0 * p.zeta1_r * dt);
  d.process_cov(1, 1) = k2 * dt * h_func(2.0 * p.zeta1_lambda * dt);
  return d;
}

// Discrete state-space representation over a maturity grid.
//
// State equation:        x_n = transition x_{n-1} + eta_n, eta ~ N(0, process_cov)
// Measurement equation:  y_n = intercept + loading x_n + eps_n, eps ~ N(0, diag(meas_var))
//
// Row i of loading is (-H(zeta1_r tau_i), -H(zeta1_lambda tau_i)); entry i of
// intercept is the sum over components of R_inf - w(tau_i).
struct DiscreteSystem {
  double dt = 0.0;
  Eigen::Matrix2d transition = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d process_cov = Eigen::Matrix2d::Zero();
  Eigen::MatrixXd loading;    // M x 2
  Eigen::VectorXd intercept;  // M
  Eigen::VectorXd meas_var;   // diagonal of the M x M measurement covariance
  std::vector<double> tenors;

  Eigen::Index n_tenors() const { return intercept.size(); }
  Eigen::MatrixXd meas_cov() const {
    return Eigen::MatrixXd(meas_var.asDiagonal());
  }
};

inline DiscreteSystem build_system(const ModelParams& p, double dt,
                                   const std::vector<double>& tenors) {
  p.validate();
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("build_system: dt must be > 0, got " +
                                std::to_string(dt));
  if (tenors.empty())
    throw std::invalid_argument("build_system: tenor grid is empty");
  for (std::size_t i = 0; i < tenors.size(); ++i) {
    if (!(tenors[i] > 0.0) || !std::isfinite(tenors[i]))
      throw std::invalid_argument("build_system: tenor " +
                                  std::to_string(tenors[i]) +
                                  " must be strictly positive");
    if (i > 0 && !(tenors[i] > tenors[i - 1]))
      throw std::invalid_argument(
          "build_system: tenors must be strictly increasing (duplicate or "
          "out-of-order entry at index " +
          std::to_string(i) + ")");
  }

  DiscreteSystem sys;
  sys.dt = dt;
  sys.tenors = tenors;
  const FactorDynamics dyn = factor_dynamics(p, dt);
  sys.transition = dyn.transition;
  sys.process_cov = dyn.process_cov;

  const auto m = static_cast<Eigen::Index>(tenors.size());
  sys.loading.resize(m, 2);
  sys.intercept.resize(m);
  sys.meas_var = Eigen::VectorXd::Constant(m, p.h_meas);

  const PerComponent rinf = asymptotic_yield(p);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Tenor tau(tenors[static_cast<std::size_t>(i)]);
    const PerComponent w = w_tau(p, tau);
    sys.loading(i, 0) = -h_func(p.zeta1_r * tau.years());
    sys.loading(i, 1) = -h_func(p.zeta1_lambda * tau.years());
    sys.intercept(i) = (rinf.r - w.r) + (rinf.lambda - w.lambda);
  }
  return sys;
}

// Stationary law of the factor: mean 0, variance kappa11^2 / (2 zeta1) per
// component. Used to initialize the filter and to seed simulations.
struct StationaryMoments {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

inline StationaryMoments stationary_moments(const ModelParams& p) {
  p.validate();
  StationaryMoments s;
  const double k2 = p.kappa11 * p.kappa11;
  s.cov(0, 0) = k2 / (2.0 * p.zeta1_r);
  s.cov(1, 1) = k2 / (2.0 * p.zeta1_lambda);
  return s;
}

}  // namespace zclb
