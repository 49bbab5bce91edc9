#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zclb/kalman.hpp"
#include "zclb/nelder_mead.hpp"
#include "zclb/rng.hpp"

namespace zclb {

inline constexpr int kNumParams = 10;

inline constexpr std::array<const char*, kNumParams> kParamNames = {
    "mu_r",    "mu_lambda", "zeta1_r", "zeta1_lambda", "zeta2_r",
    "zeta2_lambda", "kappa11", "kappa12", "theta1", "h_meas"};

// Positive-domain parameters are optimized through log; mu and theta1 are
// unconstrained.
inline constexpr std::array<bool, kNumParams> kLogTransformed = {
    false, false, true, true, true, true, true, true, false, true};

inline double param_value(const ModelParams& p, int i) {
  switch (i) {
    case 0: return p.mu_r;
    case 1: return p.mu_lambda;
    case 2: return p.zeta1_r;
    case 3: return p.zeta1_lambda;
    case 4: return p.zeta2_r;
    case 5: return p.zeta2_lambda;
    case 6: return p.kappa11;
    case 7: return p.kappa12;
    case 8: return p.theta1;
    case 9: return p.h_meas;
    default: throw std::out_of_range("param_value: bad index");
  }
}

inline void set_param(ModelParams& p, int i, double v) {
  switch (i) {
    case 0: p.mu_r = v; break;
    case 1: p.mu_lambda = v; break;
    case 2: p.zeta1_r = v; break;
    case 3: p.zeta1_lambda = v; break;
    case 4: p.zeta2_r = v; break;
    case 5: p.zeta2_lambda = v; break;
    case 6: p.kappa11 = v; break;
    case 7: p.kappa12 = v; break;
    case 8: p.theta1 = v; break;
    case 9: p.h_meas = v; break;
    default: throw std::out_of_range("set_param: bad index");
  }
}

inline int param_index(std::string_view name) {
  for (int i = 0; i < kNumParams; ++i)
    if (name == kParamNames[static_cast<std::size_t>(i)]) return i;
  return -1;
}

struct CalibrationConfig {
  std::array<bool, kNumParams> free_mask{};  // estimated vs fixed
  ModelParams initial_guess;
  int restarts = 1;
  double tolerance = 1e-6;   // absolute log-likelihood spread at convergence
  int max_iterations = 500;  // per restart
  std::uint64_t seed = 0;
  double dt = 1.0 / 252.0;   // observation interval of the panel
  double restart_spread = 0.5;  // transform-space stddev of restart offsets
  // Re-runs of the simplex from the incumbent optimum with a shrinking start
  // simplex; guards against premature collapse on stiff likelihoods.
  int polish_rounds = 2;

  int n_free() const {
    int n = 0;
    for (bool b : free_mask) n += b ? 1 : 0;
    return n;
  }

  void validate() const {
    if (n_free() == 0)
      throw std::invalid_argument(
          "CalibrationConfig: at least one parameter must be free");
    if (!(tolerance > 0.0))
      throw std::invalid_argument("CalibrationConfig: tolerance must be > 0");
    if (restarts < 1)
      throw std::invalid_argument("CalibrationConfig: restarts must be >= 1");
    if (max_iterations < 1)
      throw std::invalid_argument(
          "CalibrationConfig: max_iterations must be >= 1");
    if (!(dt > 0.0))
      throw std::invalid_argument("CalibrationConfig: dt must be > 0");
  }
};

struct RestartInfo {
  int index = 0;
  double initial_loglik = std::numeric_limits<double>::quiet_NaN();
  double final_loglik = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
};

struct CalibrationResult {
  ModelParams params;
  std::array<double, kNumParams> std_errors{};  // 0 for fixed parameters
  bool se_available = false;
  double final_loglik = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  int best_restart = -1;
  std::vector<RestartInfo> restart_info;
};

class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& msg,
                            std::optional<CalibrationResult> best = {})
      : std::runtime_error(msg), best_so_far(std::move(best)) {}
  std::optional<CalibrationResult> best_so_far;
};

// Central-difference Hessian; step per coordinate is rel_step * max(1, |x_i|).
template <class F>
Eigen::MatrixXd fd_hessian(F&& f, const Eigen::VectorXd& x,
                           double rel_step = 1e-4) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i)
    h(i) = rel_step * std::max(1.0, std::abs(x(i)));

  Eigen::MatrixXd hess(n, n);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h(i);
    xm(i) -= h(i);
    hess(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h(i) * h(i));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += h(i); xpp(j) += h(j);
      xpm(i) += h(i); xpm(j) -= h(j);
      xmp(i) -= h(i); xmp(j) += h(j);
      xmm(i) -= h(i); xmm(j) -= h(j);
      hess(i, j) = hess(j, i) =
          (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h(i) * h(j));
    }
  }
  return hess;
}

struct TransformSpaceSE {
  Eigen::VectorXd se;
  bool available = false;
};

// Standard errors from the observed information: sqrt of the diagonal of
// (-Hessian)^{-1} at a local maximum of `loglik`. Unavailable (rather than
// an error) when the negative Hessian is not positive definite.
template <class F>
TransformSpaceSE transform_space_se(F&& loglik, const Eigen::VectorXd& theta,
                                    double rel_step = 1e-4) {
  TransformSpaceSE out;
  const Eigen::MatrixXd neg_hess = -fd_hessian(loglik, theta, rel_step);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_hess);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    return out;
  const Eigen::MatrixXd cov = es.eigenvectors() *
                              es.eigenvalues().cwiseInverse().asDiagonal() *
                              es.eigenvectors().transpose();
  out.se = cov.diagonal().cwiseSqrt();
  out.available = true;
  return out;
}

namespace detail {

inline std::vector<int> free_indices(const std::array<bool, kNumParams>& m) {
  std::vector<int> idx;
  for (int i = 0; i < kNumParams; ++i)
    if (m[static_cast<std::size_t>(i)]) idx.push_back(i);
  return idx;
}

inline double to_transform(double v, int i) {
  return kLogTransformed[static_cast<std::size_t>(i)] ? std::log(v) : v;
}

inline double from_transform(double t, int i) {
  return kLogTransformed[static_cast<std::size_t>(i)] ? std::exp(t) : t;
}

inline ModelParams params_from_theta(const ModelParams& base,
                                     const std::vector<int>& free,
                                     const Eigen::VectorXd& theta) {
  ModelParams p = base;
  for (std::size_t k = 0; k < free.size(); ++k)
    set_param(p, free[k], from_transform(theta(static_cast<Eigen::Index>(k)),
                                         free[k]));
  return p;
}

// Transform-space log-likelihood of the panel; -inf on any domain or filter
// failure so the optimizer treats the region as forbidden.
struct PanelLogLik {
  const YieldPanel* panel;
  ModelParams base;
  std::vector<int> free;
  double dt;

  double operator()(const Eigen::VectorXd& theta) const {
    try {
      const ModelParams p = params_from_theta(base, free, theta);
      const DiscreteSystem sys = build_system(p, dt, panel->tenors);
      return log_likelihood(sys, *panel);
    } catch (const std::exception&) {
      return -std::numeric_limits<double>::infinity();
    }
  }
};

inline std::string describe_guess(const ModelParams& p,
                                  const std::vector<int>& free) {
  std::ostringstream os;
  for (std::size_t k = 0; k < free.size(); ++k) {
    if (k) os << ", ";
    os << kParamNames[static_cast<std::size_t>(free[k])] << "="
       << param_value(p, free[k]);
  }
  return os.str();
}

}  // namespace detail

struct StdErrors {
  std::array<double, kNumParams> values{};  // 0 for fixed parameters
  bool available = false;
};

// Delta-method standard errors of the natural parameters at a likelihood
// optimum: transform-space observed information mapped by d(natural)/d(log)
// = natural for log parameters, 1 otherwise.
inline StdErrors standard_errors(const YieldPanel& panel,
                                 const ModelParams& at_optimum,
                                 const CalibrationConfig& config) {
  const std::vector<int> free = detail::free_indices(config.free_mask);
  detail::PanelLogLik loglik{&panel, at_optimum, free, config.dt};
  Eigen::VectorXd theta(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k)
    theta(static_cast<Eigen::Index>(k)) =
        detail::to_transform(param_value(at_optimum, free[k]), free[k]);

  StdErrors out;
  const TransformSpaceSE tse = transform_space_se(loglik, theta);
  if (!tse.available) return out;
  for (std::size_t k = 0; k < free.size(); ++k) {
    const int i = free[k];
    const double jac = kLogTransformed[static_cast<std::size_t>(i)]
                           ? param_value(at_optimum, i)
                           : 1.0;
    out.values[static_cast<std::size_t>(i)] =
        tse.se(static_cast<Eigen::Index>(k)) * std::abs(jac);
  }
  out.available = true;
  return out;
}

// Maximum-likelihood estimation of the free parameters by multi-start
// Nelder-Mead over the transformed parameter vector. Deterministic given the
// seed; ties across restarts break toward the lowest restart index.
inline CalibrationResult calibrate(const YieldPanel& panel,
                                   const CalibrationConfig& config) {
  config.validate();
  const std::vector<int> free = detail::free_indices(config.free_mask);

  if (panel.n_observed_rows() <
      static_cast<Eigen::Index>(2 * free.size()))
    throw std::invalid_argument(
        "calibrate: panel must have at least 2 x (free parameters) observed "
        "steps");

  for (int i : free) {
    const double v = param_value(config.initial_guess, i);
    if (kLogTransformed[static_cast<std::size_t>(i)] && !(v > 0.0))
      throw std::invalid_argument(
          std::string("calibrate: initial guess for ") +
          kParamNames[static_cast<std::size_t>(i)] +
          " must be strictly positive (log transform), got " +
          std::to_string(v));
  }

  detail::PanelLogLik loglik{&panel, config.initial_guess, free, config.dt};
  Eigen::VectorXd theta0(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k)
    theta0(static_cast<Eigen::Index>(k)) = detail::to_transform(
        param_value(config.initial_guess, free[k]), free[k]);

  if (!std::isfinite(loglik(theta0)))
    throw CalibrationError(
        "calibrate: log-likelihood is not finite at the initial guess (" +
        detail::describe_guess(config.initial_guess, free) + ")");

  auto objective = [&loglik](const Eigen::VectorXd& t) { return -loglik(t); };

  NelderMeadOptions nm;
  nm.tolerance = config.tolerance;
  nm.max_iterations = config.max_iterations;

  CalibrationResult result;
  bool have_best = false;
  Eigen::VectorXd best_theta;

  for (int k = 0; k < config.restarts; ++k) {
    Eigen::VectorXd start = theta0;
    if (k > 0) {
      Rng rng(config.seed, static_cast<std::uint64_t>(k));
      for (int attempt = 0; attempt < 16; ++attempt) {
        for (Eigen::Index i = 0; i < start.size(); ++i)
          start(i) = theta0(i) + config.restart_spread * rng.normal();
        if (std::isfinite(loglik(start))) break;
      }
    }

    const double start_ll = loglik(start);
    NelderMeadResult nmres = nelder_mead(objective, start, nm);
    int iterations = nmres.iterations;
    for (int round = 0; round < config.polish_rounds; ++round) {
      NelderMeadOptions polish = nm;
      polish.initial_step = nm.initial_step * std::pow(0.2, round + 1);
      const NelderMeadResult again = nelder_mead(objective, nmres.x, polish);
      iterations += again.iterations;
      const bool improved = again.fx < nmres.fx - config.tolerance;
      if (again.fx < nmres.fx) nmres = again;
      if (!improved) break;
    }

    RestartInfo info;
    info.index = k;
    info.initial_loglik = start_ll;
    info.final_loglik = -nmres.fx;
    info.iterations = iterations;
    info.converged = nmres.converged;
    result.restart_info.push_back(info);

    if (!have_best || info.final_loglik > result.final_loglik) {
      have_best = true;
      best_theta = nmres.x;
      result.final_loglik = info.final_loglik;
      result.iterations = nmres.iterations;
      result.converged = nmres.converged;
      result.best_restart = k;
    }
  }

  result.params =
      detail::params_from_theta(config.initial_guess, free, best_theta);

  bool any_converged = false;
  for (const RestartInfo& info : result.restart_info)
    any_converged = any_converged || info.converged;
  if (!any_converged) {
    CalibrationResult best = result;
    throw CalibrationError(
        "calibrate: no restart converged within " +
            std::to_string(config.max_iterations) +
            " iterations (best log-likelihood " +
            std::to_string(result.final_loglik) + " at restart " +
            std::to_string(result.best_restart) + ")",
        std::move(best));
  }

  const StdErrors se = standard_errors(panel, result.params, config);
  result.std_errors = se.values;
  result.se_available = se.available;
  return result;
}

}  // namespace zclb
