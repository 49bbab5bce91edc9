#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_util.hpp"

using zclb::FactorState;
using zclb::h_func;
using zclb::ModelParams;
using zclb::Tenor;

namespace {

ModelParams deterministic_params(double mu_r, double mu_lambda, double zeta_r,
                                 double zeta_lambda) {
  return ModelParams::one_factor(mu_r, mu_lambda, zeta_r, zeta_lambda, 0.0,
                                 0.0, 0.0);
}

// Trapezoid integral of z(u) = mu - e^{-zeta u} x over [0, tau]; the
// deterministic mean-path discount used as an independent pricing oracle.
double trapezoid_discount_exponent(double mu, double zeta, double x,
                                   double tau, int n) {
  double sum = 0.0;
  const double dt = tau / n;
  auto z = [&](double u) { return mu - std::exp(-zeta * u) * x; };
  for (int i = 0; i < n; ++i)
    sum += 0.5 * (z(i * dt) + z((i + 1) * dt)) * dt;
  return sum;
}

// Mean and variance of the integrated OU deviation \int_0^tau X_u du with
// X_0 = x, computed by quadrature of the covariance kernel
// Cov(X_u, X_v) = kappa^2/(2 zeta) (e^{-zeta|u-v|} - e^{-zeta(u+v)}).
struct IntegratedOU {
  double mean;
  double var;
};

IntegratedOU integrated_ou_quadrature(double zeta, double kappa, double x,
                                      double tau, int n) {
  const double dt = tau / n;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = std::exp(-zeta * (i * dt)) * x;
    const double b = std::exp(-zeta * ((i + 1) * dt)) * x;
    mean += 0.5 * (a + b) * dt;
  }
  const double scale = kappa * kappa / (2.0 * zeta);
  auto kernel = [&](double u, double v) {
    return scale *
           (std::exp(-zeta * std::abs(u - v)) - std::exp(-zeta * (u + v)));
  };
  double var = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      double w = 1.0;
      if (i == 0 || i == n) w *= 0.5;
      if (j == 0 || j == n) w *= 0.5;
      var += w * kernel(i * dt, j * dt) * dt * dt;
    }
  return {mean, var};
}

}  // namespace

TEST_CASE("h_func values and limits") {
  CHECK(h_func(0.0) == 1.0);
  CHECK_THAT(h_func(1.0), Catch::Matchers::WithinAbs(0.6321205588285577, 1e-14));
  CHECK_THAT(h_func(1.0), Catch::Matchers::WithinAbs(0.632121, 1e-6));
  CHECK(h_func(1e6) < 1e-5);
  CHECK(h_func(800.0) == Catch::Approx(1.0 / 800.0).epsilon(1e-12));
}

TEST_CASE("h_func is decreasing with range (0, 1] for gamma >= 0") {
  double prev = h_func(0.0);
  CHECK(prev == 1.0);
  for (double g = 1e-6; g < 1e5; g *= 3.0) {
    const double v = h_func(g);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("h_func series and closed form agree at the switch threshold") {
  for (double g : {zclb::kHSeriesThreshold, 0.99 * zclb::kHSeriesThreshold,
                   1.01 * zclb::kHSeriesThreshold}) {
    const double series = 1.0 - g / 2.0 + g * g / 6.0 - g * g * g / 24.0;
    const double closed = -std::expm1(-g) / g;
    CHECK_THAT(series, Catch::Matchers::WithinAbs(closed, 1e-12));
    CHECK_THAT(h_func(g), Catch::Matchers::WithinAbs(closed, 1e-12));
  }
}

TEST_CASE("asymptotic yield") {
  SECTION("drift and diffusion terms vanish") {
    const auto p = deterministic_params(0.05, 0.01, 1.0, 1.0);
    const auto r = zclb::asymptotic_yield(p);
    CHECK(r.r == 0.05);
    CHECK(r.lambda == 0.01);
  }
  SECTION("kappa11/zeta1 = 2 theta1 cancels the adjustment") {
    ModelParams p = ModelParams::one_factor(0.07, 0.02, 1.0, 1.0, 0.5, 0.25, 0.0);
    const auto r = zclb::asymptotic_yield(p);
    CHECK_THAT(r.r, Catch::Matchers::WithinAbs(0.07, 1e-15));
  }
  SECTION("direct arithmetic") {
    ModelParams p = ModelParams::one_factor(0.1, 0.0, 1.0, 1.0, 0.03, 0.5, 0.0);
    const auto r = zclb::asymptotic_yield(p);
    CHECK_THAT(r.r, Catch::Matchers::WithinAbs(0.114550, 1e-12));
  }
}

TEST_CASE("w_tau values and asymptotics") {
  SECTION("vanishes when theta1 = kappa12 = 0") {
    ModelParams p = ModelParams::one_factor(0.05, 0.01, 1.3, 0.7, 0.02, 0.0, 0.0);
    for (double t : {0.0, 0.5, 3.0, 40.0}) {
      const auto w = zclb::w_tau(p, Tenor(t));
      CHECK(w.r == 0.0);
      CHECK(w.lambda == 0.0);
    }
  }
  SECTION("single-component evaluation") {
    ModelParams p = ModelParams::one_factor(0.1, 0.0, 1.0, 1.0, 0.03, 0.5, 0.0);
    const auto w = zclb::w_tau(p, Tenor(1.0));
    CHECK_THAT(w.r, Catch::Matchers::WithinAbs(0.009481808382428366, 1e-12));
  }
  SECTION("decays to zero at long maturities") {
    zclb::Rng rng(11);
    for (int i = 0; i < 20; ++i) {
      const ModelParams p = testutil::random_params(rng);
      const auto w = zclb::w_tau(p, Tenor(1e6));
      CHECK(std::abs(w.r) < 1e-6);
      CHECK(std::abs(w.lambda) < 1e-6);
    }
  }
}

TEST_CASE("yield composition and zero-tenor rejection") {
  ModelParams p = ModelParams::one_factor(0.1, 0.03, 1.0, 0.8, 0.03, 0.5, 0.0);
  const FactorState x{0.01, -0.004};
  const Tenor tau(1.0);

  const auto rinf = zclb::asymptotic_yield(p);
  const auto w = zclb::w_tau(p, tau);
  const double expected =
      (rinf.r - w.r - h_func(p.zeta1_r) * x.x_r) +
      (rinf.lambda - w.lambda - h_func(p.zeta1_lambda) * x.x_lambda);
  CHECK_THAT(zclb::zclb_yield(p, x, tau),
             Catch::Matchers::WithinAbs(expected, 1e-15));

  CHECK_THROWS_AS(zclb::zclb_yield(p, x, Tenor(0.0)), std::invalid_argument);

  SECTION("deterministic sum of long-run means") {
    const auto pd = deterministic_params(0.05, 0.01, 1.0, 1.0);
    CHECK_THAT(zclb::zclb_yield(pd, FactorState{}, Tenor(3.0)),
               Catch::Matchers::WithinAbs(0.06, 1e-15));
  }
}

TEST_CASE("price basics") {
  SECTION("price at zero tenor is exactly one for any state") {
    zclb::Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      const ModelParams p = testutil::random_params(rng);
      const FactorState x{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
      CHECK(zclb::zclb_price(p, x, Tenor(0.0)) == 1.0);
    }
  }
  SECTION("pure deterministic discounting") {
    const auto p = deterministic_params(0.04, 0.01, 1.0, 1.0);
    CHECK_THAT(zclb::zclb_price(p, FactorState{}, Tenor(2.0)),
               Catch::Matchers::WithinAbs(0.9048374180359595, 1e-12));
  }
  SECTION("-log(B)/tau equals the yield") {
    zclb::Rng rng(7);
    for (int i = 0; i < 50; ++i) {
      const ModelParams p = testutil::random_params(rng);
      const FactorState x{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
      const double tau = rng.uniform(0.1, 30.0);
      const double y = zclb::zclb_yield(p, x, Tenor(tau));
      const double b = zclb::zclb_price(p, x, Tenor(tau));
      CHECK_THAT(-std::log(b) / tau, Catch::Matchers::WithinAbs(y, 1e-12));
    }
  }
}

TEST_CASE("price factorizes into per-component prices") {
  zclb::Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const ModelParams p = testutil::random_params(rng);
    const FactorState x{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
    const double tau = rng.uniform(0.1, 20.0);
    const auto y = zclb::component_yields(p, x, Tenor(tau));
    const double product = std::exp(-tau * y.r) * std::exp(-tau * y.lambda);
    const double price = zclb::zclb_price(p, x, Tenor(tau));
    CHECK_THAT(price, Catch::Matchers::WithinRel(product, 1e-13));

    const auto surv = zclb::survival_prob(p, x, Tenor(tau));
    CHECK_THAT(price, Catch::Matchers::WithinRel(
                          std::exp(-tau * y.r) * surv.value, 1e-13));
  }
}

TEST_CASE("survival probability") {
  SECTION("horizon zero") {
    const auto p = deterministic_params(0.05, 0.01, 1.0, 1.0);
    CHECK(zclb::survival_prob(p, FactorState{}, Tenor(0.0)).value == 1.0);
  }
  SECTION("deterministic intensity") {
    const auto p = deterministic_params(0.05, 0.01, 1.0, 1.0);
    const auto s = zclb::survival_prob(p, FactorState{}, Tenor(10.0));
    CHECK_THAT(s.value, Catch::Matchers::WithinAbs(0.9048374180359595, 1e-12));
    CHECK_FALSE(s.exceeds_one);
  }
  SECTION("negative implied intensity is flagged, not clamped") {
    const auto p = deterministic_params(0.05, 0.01, 1.0, 1.0);
    const auto s = zclb::survival_prob(p, FactorState{0.0, 0.5}, Tenor(1.0));
    CHECK(s.value > 1.0);
    CHECK(s.exceeds_one);
  }
}

TEST_CASE("deterministic mean-path discount matches a trapezoid oracle") {
  zclb::Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    const double mu_r = rng.uniform(0.0, 0.1);
    const double mu_l = rng.uniform(0.0, 0.05);
    const double zr = rng.uniform(0.3, 2.0);
    const double zl = rng.uniform(0.3, 2.0);
    const double tau = rng.uniform(0.5, 4.0);
    const FactorState x{rng.uniform(-0.05, 0.05), rng.uniform(-0.02, 0.02)};
    const auto p = deterministic_params(mu_r, mu_l, zr, zl);

    const double exponent =
        trapezoid_discount_exponent(mu_r, zr, x.x_r, tau, 20000) +
        trapezoid_discount_exponent(mu_l, zl, x.x_lambda, tau, 20000);
    const double oracle = std::exp(-exponent);
    CHECK_THAT(zclb::zclb_price(p, x, Tenor(tau)),
               Catch::Matchers::WithinRel(oracle, 1e-8));
  }
}

TEST_CASE("trapezoid oracle error shrinks quadratically") {
  const auto p = deterministic_params(0.05, 0.0, 1.2, 1.0);
  const FactorState x{0.03, 0.0};
  const double tau = 2.0;
  const double exact = -std::log(zclb::zclb_price(p, x, Tenor(tau)));
  const double e1 =
      std::abs(trapezoid_discount_exponent(0.05, 1.2, 0.03, tau, 50) +
               trapezoid_discount_exponent(0.0, 1.0, 0.0, tau, 50) - exact);
  const double e2 =
      std::abs(trapezoid_discount_exponent(0.05, 1.2, 0.03, tau, 100) +
               trapezoid_discount_exponent(0.0, 1.0, 0.0, tau, 100) - exact);
  CHECK(e2 < e1 / 3.5);  // O(dt^2) halving
}

TEST_CASE("kappa12 = kappa11, zeta2 = zeta1 reproduces the exact integrated-OU law") {
  // In this configuration the closed form must equal the lognormal
  // expectation exp(-E \int z + Var(\int z)/2); the moments come from an
  // independent quadrature of the OU covariance kernel.
  zclb::Rng rng(23);
  for (int i = 0; i < 5; ++i) {
    ModelParams p;
    p.mu_r = 0.0;
    p.mu_lambda = rng.uniform(0.005, 0.05);
    p.zeta1_r = 1.0;
    p.zeta1_lambda = rng.uniform(0.4, 1.5);
    p.zeta2_r = p.zeta1_r;
    p.zeta2_lambda = p.zeta1_lambda;
    p.kappa11 = rng.uniform(0.002, 0.02);
    p.kappa12 = p.kappa11;
    p.theta1 = 0.0;
    p.h_meas = 0.0;
    const double x = rng.uniform(-0.01, 0.01);
    const double tau = rng.uniform(1.0, 6.0);

    const IntegratedOU m =
        integrated_ou_quadrature(p.zeta1_lambda, p.kappa11, x, tau, 600);
    const double expected =
        std::exp(-(p.mu_lambda * tau - m.mean) + 0.5 * m.var);
    const auto s = zclb::survival_prob(p, FactorState{0.0, x}, Tenor(tau));
    CHECK_THAT(s.value, Catch::Matchers::WithinRel(expected, 1e-6));
  }
}

TEST_CASE("long-maturity yield converges to the summed asymptote") {
  ModelParams p = ModelParams::one_factor(0.06, 0.01, 0.9, 1.4, 0.004, 0.15, 0.0);
  const auto w = zclb::w_tau(p, Tenor(1e6));
  CHECK(std::abs(w.r) < 1e-8);
  CHECK(std::abs(w.lambda) < 1e-8);
  const double y = zclb::zclb_yield(p, FactorState{}, Tenor(1e6));
  CHECK_THAT(y, Catch::Matchers::WithinAbs(zclb::asymptotic_yield(p).sum(), 1e-8));
}

TEST_CASE("parameter validation") {
  ModelParams p;
  p.zeta1_r = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.zeta1_r = 1.0;
  p.kappa11 = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.kappa11 = 0.0;
  p.h_meas = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(Tenor(-1.0), std::invalid_argument);
  const FactorState bad{std::nan(""), 0.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
