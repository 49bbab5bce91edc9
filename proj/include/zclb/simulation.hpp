#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zclb/panel.hpp"
#include "zclb/rng.hpp"
#include "zclb/state_space.hpp"

namespace zclb {

struct SimulationConfig {
  double dt = 1.0 / 252.0;
  int n_steps = 1;
  std::vector<double> tenors;  // required by simulate_panel only
  std::uint64_t seed = 0;
  int n_paths = 1;
  // Fixed start; when absent each path starts from a stationary draw.
  std::optional<FactorState> initial_state;
  Date start_date{std::chrono::year{2000}, std::chrono::January,
                  std::chrono::day{1}};

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw std::invalid_argument("SimulationConfig: dt must be > 0");
    if (n_steps < 1)
      throw std::invalid_argument("SimulationConfig: n_steps must be >= 1");
    if (n_paths < 1)
      throw std::invalid_argument("SimulationConfig: n_paths must be >= 1");
    if (initial_state) initial_state->validate();
  }
};

namespace detail {

inline Eigen::Vector2d initial_factor(const ModelParams& p,
                                      const SimulationConfig& cfg, Rng& rng) {
  if (cfg.initial_state)
    return {cfg.initial_state->x_r, cfg.initial_state->x_lambda};
  const StationaryMoments s = stationary_moments(p);
  return {std::sqrt(s.cov(0, 0)) * rng.normal(),
          std::sqrt(s.cov(1, 1)) * rng.normal()};
}

// One exact transition step x -> T x + chol(V) n for the diagonal system.
inline Eigen::Vector2d step_factor(const FactorDynamics& dyn,
                                   const Eigen::Vector2d& x, Rng& rng) {
  Eigen::Vector2d next;
  next(0) = dyn.transition(0, 0) * x(0) +
            std::sqrt(dyn.process_cov(0, 0)) * rng.normal();
  next(1) = dyn.transition(1, 1) * x(1) +
            std::sqrt(dyn.process_cov(1, 1)) * rng.normal();
  return next;
}

inline Eigen::MatrixXd simulate_states_stream(const ModelParams& p,
                                              const SimulationConfig& cfg,
                                              Rng& rng) {
  const FactorDynamics dyn = factor_dynamics(p, cfg.dt);
  Eigen::MatrixXd path(cfg.n_steps, 2);
  Eigen::Vector2d x = initial_factor(p, cfg, rng);
  for (int t = 0; t < cfg.n_steps; ++t) {
    x = step_factor(dyn, x, rng);
    path.row(t) = x.transpose();
  }
  return path;
}

inline double percentile(std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

// Exact simulation of the factor path; row t holds the state after step
// t + 1. Reproducible given (seed); the initial stationary draw, when used,
// comes from the same stream.
inline Eigen::MatrixXd simulate_states(const ModelParams& p,
                                       const SimulationConfig& cfg) {
  cfg.validate();
  p.validate();
  Rng rng(cfg.seed, 0);
  return detail::simulate_states_stream(p, cfg, rng);
}

struct SimulatedPanel {
  YieldPanel observed;        // noisy yields, the calibration input
  Eigen::MatrixXd noiseless;  // intercept + loading * state, per step
  Eigen::MatrixXd states;     // true factor path, n_steps x 2
};

// Synthetic yield panel: for each step and tenor, yield = intercept +
// loading * x + eps with eps ~ N(0, h_meas). States use stream 0 and
// measurement noise stream 1, so the noiseless panel is invariant to the
// noise draw count.
inline SimulatedPanel simulate_panel(const ModelParams& p,
                                     const SimulationConfig& cfg) {
  cfg.validate();
  if (cfg.tenors.empty())
    throw std::invalid_argument("simulate_panel: tenor grid is empty");
  const DiscreteSystem sys = build_system(p, cfg.dt, cfg.tenors);

  Rng state_rng(cfg.seed, 0);
  Rng noise_rng(cfg.seed, 1);

  SimulatedPanel out;
  out.states = detail::simulate_states_stream(p, cfg, state_rng);

  const auto m = sys.n_tenors();
  out.noiseless.resize(cfg.n_steps, m);
  out.observed.values.resize(cfg.n_steps, m);
  out.observed.tenors = cfg.tenors;
  out.observed.source_file = "simulated";
  const double noise_sd = std::sqrt(p.h_meas);

  for (int t = 0; t < cfg.n_steps; ++t) {
    const Eigen::Vector2d x = out.states.row(t).transpose();
    const Eigen::VectorXd clean = sys.intercept + sys.loading * x;
    out.noiseless.row(t) = clean.transpose();
    for (Eigen::Index j = 0; j < m; ++j)
      out.observed.values(t, j) = clean(j) + noise_sd * noise_rng.normal();
    out.observed.dates.push_back(
        Date{std::chrono::sys_days(cfg.start_date) + std::chrono::days{t}});
  }
  return out;
}

struct SurvivalPoint {
  double horizon = 0.0;
  double mean = 1.0;
  double p5 = 1.0;
  double p95 = 1.0;
  double std_error = 0.0;  // Monte Carlo standard error of the mean
};

struct SurvivalTable {
  std::vector<SurvivalPoint> points;
  // Fraction of paths whose simulated intensity went negative anywhere on
  // the grid. Reported, never clipped.
  double negative_intensity_fraction = 0.0;
  int n_paths = 0;
};

// Monte Carlo survival curve: simulates lambda = mu_lambda - x_lambda on a
// grid containing every requested horizon, accumulates the trapezoid-rule
// integral of lambda, and summarizes exp(-integral) across paths. Per-path
// streams are derived from (seed, path index).
inline SurvivalTable monte_carlo_survival(const ModelParams& p,
                                          const SimulationConfig& cfg,
                                          const std::vector<double>& horizons) {
  cfg.validate();
  p.validate();
  if (horizons.empty())
    throw std::invalid_argument("monte_carlo_survival: no horizons");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] >= 0.0) || !std::isfinite(horizons[i]))
      throw std::invalid_argument(
          "monte_carlo_survival: horizons must be non-negative");
    if (i > 0 && !(horizons[i] > horizons[i - 1]))
      throw std::invalid_argument(
          "monte_carlo_survival: horizons must be strictly increasing");
  }

  // Time grid: uniform cfg.dt steps, with every horizon spliced in exactly.
  std::vector<double> grid{0.0};
  const double max_h = horizons.back();
  for (int k = 1; static_cast<double>(k - 1) * cfg.dt < max_h; ++k)
    grid.push_back(std::min(static_cast<double>(k) * cfg.dt, max_h));
  grid.insert(grid.end(), horizons.begin(), horizons.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) {
                           return std::abs(a - b) <= 1e-12 * std::max(1.0, a);
                         }),
             grid.end());

  const std::size_t n_nodes = grid.size();
  std::vector<std::size_t> horizon_node(horizons.size());
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const auto it = std::min_element(
        grid.begin(), grid.end(), [&](double a, double b) {
          return std::abs(a - horizons[i]) < std::abs(b - horizons[i]);
        });
    horizon_node[i] = static_cast<std::size_t>(it - grid.begin());
  }

  // Per-interval exact lambda-component dynamics.
  std::vector<double> decay(n_nodes - 1), shock_sd(n_nodes - 1);
  const double k2 = p.kappa11 * p.kappa11;
  for (std::size_t j = 0; j + 1 < n_nodes; ++j) {
    const double delta = grid[j + 1] - grid[j];
    decay[j] = std::exp(-p.zeta1_lambda * delta);
    shock_sd[j] = std::sqrt(k2 * delta * h_func(2.0 * p.zeta1_lambda * delta));
  }
  const double stat_sd = std::sqrt(k2 / (2.0 * p.zeta1_lambda));

  std::vector<std::vector<double>> samples(
      horizons.size(), std::vector<double>(static_cast<std::size_t>(cfg.n_paths)));
  long negative_paths = 0;

  for (int path = 0; path < cfg.n_paths; ++path) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(path));
    double x = cfg.initial_state ? cfg.initial_state->x_lambda
                                 : stat_sd * rng.normal();
    double lambda = p.mu_lambda - x;
    bool went_negative = lambda < 0.0;
    double integral = 0.0;
    std::size_t next_h = 0;
    while (next_h < horizons.size() && horizon_node[next_h] == 0) {
      samples[next_h][static_cast<std::size_t>(path)] = 1.0;
      ++next_h;
    }
    for (std::size_t j = 0; j + 1 < n_nodes && next_h < horizons.size(); ++j) {
      x = decay[j] * x + shock_sd[j] * rng.normal();
      const double lambda_next = p.mu_lambda - x;
      integral += 0.5 * (lambda + lambda_next) * (grid[j + 1] - grid[j]);
      lambda = lambda_next;
      went_negative = went_negative || lambda < 0.0;
      while (next_h < horizons.size() && horizon_node[next_h] == j + 1) {
        samples[next_h][static_cast<std::size_t>(path)] = std::exp(-integral);
        ++next_h;
      }
    }
    if (went_negative) ++negative_paths;
  }

  SurvivalTable table;
  table.n_paths = cfg.n_paths;
  table.negative_intensity_fraction =
      static_cast<double>(negative_paths) / static_cast<double>(cfg.n_paths);
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    SurvivalPoint pt;
    pt.horizon = horizons[i];
    double sum = 0.0;
    for (double v : samples[i]) sum += v;
    pt.mean = sum / static_cast<double>(cfg.n_paths);
    if (cfg.n_paths > 1) {
      double ss = 0.0;
      for (double v : samples[i]) ss += (v - pt.mean) * (v - pt.mean);
      pt.std_error = std::sqrt(ss / static_cast<double>(cfg.n_paths - 1) /
                               static_cast<double>(cfg.n_paths));
    }
    std::sort(samples[i].begin(), samples[i].end());
    pt.p5 = detail::percentile(samples[i], 0.05);
    pt.p95 = detail::percentile(samples[i], 0.95);
    table.points.push_back(pt);
  }
  return table;
}

}  // namespace zclb
