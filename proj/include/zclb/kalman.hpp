#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zclb/panel.hpp"
#include "zclb/state_space.hpp"

namespace zclb {

// Thrown when an innovation covariance cannot be factorized; carries the
// offending step and an eigenvalue-ratio condition estimate.
class FilterError : public std::runtime_error {
 public:
  FilterError(const std::string& msg, Eigen::Index step, double condition)
      : std::runtime_error(msg), step_(step), condition_(condition) {}
  Eigen::Index step() const { return step_; }
  double condition_number() const { return condition_; }

 private:
  Eigen::Index step_;
  double condition_;
};

struct InitialState {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

// Stationary law recovered from the system itself: the fixed point of
// p = t^2 p + v per (diagonal) component. Matches stationary_moments(params)
// for a system built from those params.
inline InitialState stationary_init(const DiscreteSystem& sys) {
  InitialState s;
  for (int i = 0; i < 2; ++i) {
    const double t = sys.transition(i, i);
    if (!(t > -1.0 && t < 1.0))
      throw std::invalid_argument(
          "stationary_init: transition is not strictly stable");
    s.cov(i, i) = sys.process_cov(i, i) / (1.0 - t * t);
  }
  return s;
}

// Stationary covariance inflated by `scale`; a near-uninformative start for
// robustness experiments.
inline InitialState diffuse_init(const DiscreteSystem& sys,
                                 double scale = 1e6) {
  InitialState s = stationary_init(sys);
  s.cov *= scale;
  return s;
}

struct PredictResult {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

// One-step time update: mean -> T mean, cov -> T cov T' + V, re-symmetrized.
inline PredictResult predict(const Eigen::Vector2d& prev_mean,
                             const Eigen::Matrix2d& prev_cov,
                             const DiscreteSystem& sys) {
  PredictResult r;
  r.mean = sys.transition * prev_mean;
  Eigen::Matrix2d c =
      sys.transition * prev_cov * sys.transition.transpose() + sys.process_cov;
  r.cov = 0.5 * (c + c.transpose());
  return r;
}

struct UpdateResult {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
  Eigen::VectorXd innovation;          // observed subset, size = observed.size()
  Eigen::MatrixXd innovation_cov;      // observed subset
  std::vector<Eigen::Index> observed;  // tenor indices present at this step
  double step_loglik = 0.0;
};

// Measurement update over the observed subset of a possibly partially
// missing observation vector (NaN = missing). A fully missing step returns
// the prediction unchanged and contributes exactly 0 to the log-likelihood.
//
// The covariance update is P - P Z' F^{-1} Z P with F = Z P Z' + H; the
// information form (P^{-1} + Z' H^{-1} Z)^{-1} is algebraically identical and
// checked in the tests.
inline UpdateResult update(const Eigen::Vector2d& pred_mean,
                           const Eigen::Matrix2d& pred_cov,
                           const Eigen::VectorXd& obs,
                           const DiscreteSystem& sys,
                           Eigen::Index step_index = -1) {
  if (obs.size() != sys.n_tenors())
    throw std::invalid_argument(
        "update: observation size does not match system tenor count");

  UpdateResult r;
  for (Eigen::Index j = 0; j < obs.size(); ++j)
    if (!std::isnan(obs(j))) r.observed.push_back(j);

  if (r.observed.empty()) {
    r.mean = pred_mean;
    r.cov = pred_cov;
    r.innovation.resize(0);
    r.innovation_cov.resize(0, 0);
    r.step_loglik = 0.0;
    return r;
  }

  const auto m = static_cast<Eigen::Index>(r.observed.size());
  Eigen::MatrixXd z(m, 2);
  Eigen::VectorXd d(m), hvar(m), y(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index j = r.observed[static_cast<std::size_t>(k)];
    z.row(k) = sys.loading.row(j);
    d(k) = sys.intercept(j);
    hvar(k) = sys.meas_var(j);
    y(k) = obs(j);
  }

  const Eigen::VectorXd v = y - (d + z * pred_mean);
  Eigen::MatrixXd f = z * pred_cov * z.transpose();
  f.diagonal() += hvar;
  f = 0.5 * (f + f.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(f);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double cond =
        std::abs(lo) > 0.0 ? std::abs(hi) / std::abs(lo)
                           : std::numeric_limits<double>::infinity();
    throw FilterError("singular innovation covariance at step " +
                          std::to_string(step_index) +
                          " (condition number " + std::to_string(cond) + ")",
                      step_index, cond);
  }

  const Eigen::MatrixXd a = z * pred_cov;  // m x 2
  r.mean = pred_mean + a.transpose() * llt.solve(v);
  Eigen::Matrix2d c = pred_cov - a.transpose() * llt.solve(a);
  r.cov = 0.5 * (c + c.transpose());
  r.innovation = v;
  r.innovation_cov = f;

  const auto& l = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) logdet += 2.0 * std::log(l(k, k));
  const double quad = v.dot(llt.solve(v));
  r.step_loglik = -0.5 * (static_cast<double>(m) *
                              std::log(2.0 * std::numbers::pi) +
                          logdet + quad);
  return r;
}

struct FilterStep {
  Eigen::Vector2d predicted_mean;
  Eigen::Matrix2d predicted_cov;
  Eigen::Vector2d filtered_mean;
  Eigen::Matrix2d filtered_cov;
  Eigen::VectorXd innovation;          // observed subset; empty if step missing
  Eigen::MatrixXd innovation_cov;      // observed subset
  std::vector<Eigen::Index> observed;
  double step_loglik = 0.0;
};

struct FilterOutput {
  std::vector<FilterStep> steps;
  double total_loglik = 0.0;
};

namespace detail {

inline void check_panel_matches_system(const DiscreteSystem& sys,
                                       const YieldPanel& panel) {
  if (static_cast<Eigen::Index>(panel.tenors.size()) != sys.n_tenors())
    throw std::invalid_argument(
        "run_filter: panel tenor count does not match system");
  for (std::size_t i = 0; i < panel.tenors.size(); ++i) {
    const double a = panel.tenors[i], b = sys.tenors[i];
    if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(b)))
      throw std::invalid_argument("run_filter: panel tenor " +
                                  std::to_string(a) +
                                  " does not match system tenor " +
                                  std::to_string(b));
  }
}

// Shared filter loop; `out` may be null when only the likelihood is needed
// (the calibration hot path).
inline double filter_pass(const DiscreteSystem& sys, const YieldPanel& panel,
                          const std::optional<InitialState>& init,
                          FilterOutput* out) {
  check_panel_matches_system(sys, panel);
  const InitialState start = init ? *init : stationary_init(sys);

  Eigen::Vector2d mean = start.mean;
  Eigen::Matrix2d cov = start.cov;
  double total = 0.0;
  const Eigen::Index n = panel.values.rows();
  if (out) out->steps.reserve(static_cast<std::size_t>(n));

  for (Eigen::Index t = 0; t < n; ++t) {
    const PredictResult pred = predict(mean, cov, sys);
    UpdateResult upd = update(pred.mean, pred.cov, panel.values.row(t), sys, t);
    total += upd.step_loglik;
    if (out) {
      FilterStep s;
      s.predicted_mean = pred.mean;
      s.predicted_cov = pred.cov;
      s.filtered_mean = upd.mean;
      s.filtered_cov = upd.cov;
      s.innovation = std::move(upd.innovation);
      s.innovation_cov = std::move(upd.innovation_cov);
      s.observed = std::move(upd.observed);
      s.step_loglik = upd.step_loglik;
      out->steps.push_back(std::move(s));
      mean = out->steps.back().filtered_mean;
      cov = out->steps.back().filtered_cov;
    } else {
      mean = upd.mean;
      cov = upd.cov;
    }
  }
  if (out) out->total_loglik = total;
  return total;
}

}  // namespace detail

// Runs the filter over every panel row, alternating predict/update. The
// default initial state is the stationary law of the system.
inline FilterOutput run_filter(const DiscreteSystem& sys,
                               const YieldPanel& panel,
                               const std::optional<InitialState>& init = {}) {
  FilterOutput out;
  detail::filter_pass(sys, panel, init, &out);
  return out;
}

// Exact Gaussian log-likelihood of the panel: for each step with observed
// entries, -1/2 [m log(2 pi) + log|F| + v' F^{-1} v] using the innovation
// covariance F; fully missing steps contribute 0.
inline double log_likelihood(const DiscreteSystem& sys,
                             const YieldPanel& panel,
                             const std::optional<InitialState>& init = {}) {
  return detail::filter_pass(sys, panel, init, nullptr);
}

}  // namespace zclb
