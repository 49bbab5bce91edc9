#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"

using zclb::ModelParams;
using zclb::SimulationConfig;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// Exact mean and variance of \int_0^tau (mu - X_u) du for the OU deviation
// started at x; the lognormal-expectation oracle for survival means.
double exact_survival_mean(double mu, double zeta, double kappa, double x,
                           double tau) {
  const double h1 = zclb::h_func(zeta * tau);
  const double mean_int = mu * tau - x * tau * h1;
  const double k2z = kappa * kappa / (zeta * zeta);
  const double var_int =
      k2z * (tau - 2.0 * tau * h1 + tau * zclb::h_func(2.0 * zeta * tau));
  return std::exp(-mean_int + 0.5 * var_int);
}

}  // namespace

TEST_CASE("deterministic decay path") {
  const auto p = ModelParams::one_factor(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0);
  SimulationConfig cfg;
  cfg.dt = 1.0;
  cfg.n_steps = 5;
  cfg.initial_state = zclb::FactorState{1.0, 1.0};
  const Eigen::MatrixXd path = zclb::simulate_states(p, cfg);
  REQUIRE(path.rows() == 5);
  for (int n = 1; n <= 5; ++n) {
    CHECK_THAT(path(n - 1, 0),
               Catch::Matchers::WithinRel(std::exp(-double(n)), 1e-12));
    CHECK_THAT(path(n - 1, 1),
               Catch::Matchers::WithinRel(std::exp(-double(n)), 1e-12));
  }
}

TEST_CASE("seed determinism is bitwise") {
  const auto p = ModelParams::one_factor(0.03, 0.01, 0.8, 1.1, 0.01, 0.1, 1e-5);
  SimulationConfig cfg;
  cfg.dt = 1.0 / 252.0;
  cfg.n_steps = 100;
  cfg.tenors = {1.0, 10.0};
  cfg.seed = 99;
  const auto a = zclb::simulate_panel(p, cfg);
  const auto b = zclb::simulate_panel(p, cfg);
  CHECK(a.states == b.states);
  CHECK(a.observed.values == b.observed.values);
  CHECK(a.noiseless == b.noiseless);

  cfg.seed = 100;
  const auto c = zclb::simulate_panel(p, cfg);
  CHECK(a.states != c.states);
}

TEST_CASE("near-zero mean reversion gives i.i.d. Gaussian increments") {
  const double kappa = 0.02, dt = 1.0 / 12.0;
  const auto p = ModelParams::one_factor(0.0, 0.0, 1e-12, 1e-12, kappa, 0.0, 0.0);
  SimulationConfig cfg;
  cfg.dt = dt;
  cfg.n_steps = 20000;
  cfg.initial_state = zclb::FactorState{0.0, 0.0};
  cfg.seed = 4;
  const Eigen::MatrixXd path = zclb::simulate_states(p, cfg);
  double var = 0.0;
  double prev = 0.0;
  for (Eigen::Index t = 0; t < path.rows(); ++t) {
    const double inc = path(t, 0) - prev;
    prev = path(t, 0);
    var += inc * inc;
  }
  var /= static_cast<double>(path.rows());
  const double expected = kappa * kappa * dt;
  CHECK_THAT(var, Catch::Matchers::WithinAbs(
                      expected, 3.0 * expected * std::sqrt(2.0 / 20000.0)));
}

TEST_CASE("ensemble matches the stationary moments") {
  const double kappa = 0.01, zeta = 0.5;
  const auto p = ModelParams::one_factor(0.03, 0.01, zeta, zeta, kappa, 0.0, 0.0);
  const int n_paths = 100000;
  const double var_target = kappa * kappa / (2.0 * zeta);

  std::vector<double> finals;
  finals.reserve(n_paths);
  SimulationConfig cfg;
  cfg.dt = 1.0 / 12.0;
  cfg.n_steps = 5;  // stationary start keeps every marginal stationary
  for (int k = 0; k < n_paths; ++k) {
    cfg.seed = static_cast<std::uint64_t>(k);
    finals.push_back(zclb::simulate_states(p, cfg)(4, 0));
  }
  double mean = 0.0;
  for (double v : finals) mean += v;
  mean /= n_paths;
  double var = 0.0;
  for (double v : finals) var += (v - mean) * (v - mean);
  var /= (n_paths - 1);

  const double se_mean = std::sqrt(var_target / n_paths);
  const double se_var = var_target * std::sqrt(2.0 / (n_paths - 1));
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 3.0 * se_mean));
  CHECK_THAT(var, Catch::Matchers::WithinAbs(var_target, 3.0 * se_var));
}

TEST_CASE("panel measurement noise has the configured variance") {
  const double h = 4e-6;
  const auto p = ModelParams::one_factor(0.05, 0.01, 1.0, 1.0, 0.01, 0.0, h);
  SimulationConfig cfg;
  cfg.dt = 1.0 / 252.0;
  cfg.n_steps = 100000;
  cfg.tenors = {10.0};
  cfg.seed = 8;
  const auto sim = zclb::simulate_panel(p, cfg);

  const Eigen::ArrayXd diff =
      (sim.observed.values - sim.noiseless).col(0).array();
  const double mean = diff.mean();
  const double var = (diff - mean).square().sum() / (diff.size() - 1);
  const double se = h * std::sqrt(2.0 / (diff.size() - 1.0));
  CHECK_THAT(var, Catch::Matchers::WithinAbs(h, 3.0 * se));

  SECTION("zero measurement noise reproduces the affine yields exactly") {
    ModelParams p0 = p;
    p0.h_meas = 0.0;
    const auto clean = zclb::simulate_panel(p0, cfg);
    CHECK(clean.observed.values == clean.noiseless);
  }
}

TEST_CASE("halving the step leaves the terminal law unchanged (exactness)") {
  const auto p = ModelParams::one_factor(0.03, 0.01, 1.2, 1.0, 0.015, 0.0, 0.0);
  auto terminal_sample = [&](double dt, int steps, std::uint64_t seed_base) {
    std::vector<double> xs;
    SimulationConfig cfg;
    cfg.dt = dt;
    cfg.n_steps = steps;
    cfg.initial_state = zclb::FactorState{0.02, -0.01};
    for (int k = 0; k < 10000; ++k) {
      cfg.seed = seed_base + static_cast<std::uint64_t>(k);
      xs.push_back(zclb::simulate_states(p, cfg)(steps - 1, 0));
    }
    return xs;
  };
  const auto coarse = terminal_sample(1.0 / 12.0, 12, 0);
  const auto fine = terminal_sample(1.0 / 24.0, 24, 1000000);
  const double d = ks_statistic(coarse, fine);
  // 1% critical value for two samples of 1e4.
  CHECK(d < 1.628 * std::sqrt(2.0 / 10000.0));
}

TEST_CASE("monte carlo survival") {
  SECTION("deterministic intensity integrates exactly") {
    const auto p = ModelParams::one_factor(0.03, 0.01, 1.0, 1.0, 0.0, 0.0, 0.0);
    SimulationConfig cfg;
    cfg.dt = 1.0 / 12.0;
    cfg.n_paths = 50;
    cfg.seed = 1;
    cfg.initial_state = zclb::FactorState{0.0, 0.0};
    const auto table = zclb::monte_carlo_survival(p, cfg, {0.0, 2.0, 10.0});
    REQUIRE(table.points.size() == 3);
    CHECK(table.points[0].mean == 1.0);
    CHECK(table.points[0].p5 == 1.0);
    CHECK_THAT(table.points[1].mean,
               Catch::Matchers::WithinRel(std::exp(-0.02), 1e-12));
    CHECK_THAT(table.points[2].mean,
               Catch::Matchers::WithinRel(std::exp(-0.1), 1e-12));
    CHECK(table.points[1].p5 == table.points[1].p95);
    CHECK(table.negative_intensity_fraction == 0.0);
  }

  SECTION("matches the affine survival probability at the exact configuration") {
    ModelParams p;
    p.mu_r = 0.03;
    p.mu_lambda = 0.01;
    p.zeta1_r = 1.0;
    p.zeta1_lambda = 0.5;
    p.zeta2_r = p.zeta1_r;
    p.zeta2_lambda = p.zeta1_lambda;
    p.kappa11 = 0.005;
    p.kappa12 = p.kappa11;
    p.theta1 = 0.0;
    p.h_meas = 0.0;

    SimulationConfig cfg;
    cfg.dt = 1.0 / 12.0;
    cfg.n_paths = 100000;
    cfg.seed = 12;
    cfg.initial_state = zclb::FactorState{0.0, 0.0};
    const std::vector<double> horizons{1.0, 5.0, 10.0};
    const auto table = zclb::monte_carlo_survival(p, cfg, horizons);

    for (std::size_t i = 0; i < horizons.size(); ++i) {
      const auto affine =
          zclb::survival_prob(p, zclb::FactorState{}, zclb::Tenor(horizons[i]));
      const double analytic = exact_survival_mean(
          p.mu_lambda, p.zeta1_lambda, p.kappa11, 0.0, horizons[i]);
      CHECK_THAT(affine.value, Catch::Matchers::WithinRel(analytic, 1e-12));
      CHECK_THAT(table.points[i].mean,
                 Catch::Matchers::WithinAbs(affine.value,
                                            3.0 * table.points[i].std_error));
      CHECK(table.points[i].p5 < table.points[i].p95);
    }
  }

  SECTION("negative intensity paths are counted, not clipped") {
    const auto p = ModelParams::one_factor(0.0, 0.001, 0.5, 0.5, 0.05, 0.0, 0.0);
    SimulationConfig cfg;
    cfg.dt = 1.0 / 12.0;
    cfg.n_paths = 2000;
    cfg.seed = 3;
    cfg.initial_state = zclb::FactorState{0.0, 0.0};
    const auto table = zclb::monte_carlo_survival(p, cfg, {5.0});
    CHECK(table.negative_intensity_fraction > 0.5);
    CHECK(table.points[0].p95 > 1.0);  // survival above one is reported as-is
  }

  SECTION("deterministic given the seed") {
    const auto p = ModelParams::one_factor(0.03, 0.01, 1.0, 0.7, 0.01, 0.0, 0.0);
    SimulationConfig cfg;
    cfg.dt = 1.0 / 12.0;
    cfg.n_paths = 500;
    cfg.seed = 21;
    const auto a = zclb::monte_carlo_survival(p, cfg, {1.0, 5.0});
    const auto b = zclb::monte_carlo_survival(p, cfg, {1.0, 5.0});
    CHECK(a.points[0].mean == b.points[0].mean);
    CHECK(a.points[1].p95 == b.points[1].p95);
  }

  SECTION("input validation") {
    const auto p = ModelParams::one_factor(0.03, 0.01, 1.0, 0.7, 0.01, 0.0, 0.0);
    SimulationConfig cfg;
    CHECK_THROWS_AS(zclb::monte_carlo_survival(p, cfg, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(zclb::monte_carlo_survival(p, cfg, {2.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(zclb::monte_carlo_survival(p, cfg, {-1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("simulation config validation") {
  SimulationConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.dt = 0.1;
  cfg.n_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.n_steps = 1;
  cfg.n_paths = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
