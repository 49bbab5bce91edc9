#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace zclb {

// Two-component affine model of a zero-coupon longevity bond (ZCLB).
//
// The joint short rate / mortality intensity is z(t) = mu - X(t) with X a
// per-component Ornstein-Uhlenbeck deviation:
//
//   dX = -zeta1 X dt + kappa11 dW        (component-wise, independent noises)
//
// The ZCLB discounts by r + lambda, so its yield is the sum of two affine
// component yields
//
//   y(tau) = R_inf - w(tau) - H(zeta1 tau) x
//
// with H(g) = (1 - e^{-g})/g, R_inf the infinite-maturity yield and w(tau) a
// maturity-dependent risk/convexity adjustment that vanishes as tau -> inf.

// Static model parameters. Rates, yields and intensities are decimals per
// year (0.05 = 5%); kappas are per sqrt(year); h_meas is a yield variance.
struct ModelParams {
  double mu_r = 0.0;          // long-run mean of the short rate
  double mu_lambda = 0.0;     // long-run mean of the mortality intensity
  double zeta1_r = 1.0;       // mean-reversion speed, rate factor (> 0)
  double zeta1_lambda = 1.0;  // mean-reversion speed, mortality factor (> 0)
  double zeta2_r = 1.0;       // secondary decay rate in w(tau) cross terms
  double zeta2_lambda = 1.0;
  double kappa11 = 0.0;  // primary diffusion scale, shared by both components
  double kappa12 = 0.0;  // secondary diffusion scale in w(tau) cross terms
  double theta1 = 0.0;   // constant market price of risk
  double h_meas = 0.0;   // measurement-noise variance per observed maturity

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("ModelParams: ") + name +
                                    " must be strictly positive, got " +
                                    std::to_string(v));
    };
    auto non_negative = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("ModelParams: ") + name +
                                    " must be non-negative, got " +
                                    std::to_string(v));
    };
    auto finite = [](double v, const char* name) {
      if (!std::isfinite(v))
        throw std::invalid_argument(std::string("ModelParams: ") + name +
                                    " must be finite");
    };
    finite(mu_r, "mu_r");
    finite(mu_lambda, "mu_lambda");
    positive(zeta1_r, "zeta1_r");
    positive(zeta1_lambda, "zeta1_lambda");
    positive(zeta2_r, "zeta2_r");
    positive(zeta2_lambda, "zeta2_lambda");
    non_negative(kappa11, "kappa11");
    non_negative(kappa12, "kappa12");
    finite(theta1, "theta1");
    non_negative(h_meas, "h_meas");
  }

  // Pure one-factor configuration: the cross terms of w(tau) collapse to
  // H(zeta1 tau) theta1 kappa11 / zeta1 (zeta2 := zeta1, kappa12 := 0).
  static ModelParams one_factor(double mu_r, double mu_lambda, double zeta1_r,
                                double zeta1_lambda, double kappa11,
                                double theta1, double h_meas) {
    ModelParams p;
    p.mu_r = mu_r;
    p.mu_lambda = mu_lambda;
    p.zeta1_r = zeta1_r;
    p.zeta1_lambda = zeta1_lambda;
    p.zeta2_r = zeta1_r;
    p.zeta2_lambda = zeta1_lambda;
    p.kappa11 = kappa11;
    p.kappa12 = 0.0;
    p.theta1 = theta1;
    p.h_meas = h_meas;
    p.validate();
    return p;
  }
};

// Latent factor deviation from the long-run mean; z = mu - x, no sign
// constraint on either entry.
struct FactorState {
  double x_r = 0.0;
  double x_lambda = 0.0;

  void validate() const {
    if (!std::isfinite(x_r) || !std::isfinite(x_lambda))
      throw std::invalid_argument("FactorState: entries must be finite");
  }
};

// Time to maturity in years; tau = 0 means maturity now.
class Tenor {
 public:
  explicit Tenor(double years) : years_(years) {
    if (!std::isfinite(years) || years < 0.0)
      throw std::invalid_argument(
          "Tenor: maturity must be finite and non-negative, got " +
          std::to_string(years));
  }
  double years() const { return years_; }

 private:
  double years_;
};

// A (rate, mortality) pair of per-component values.
struct PerComponent {
  double r = 0.0;
  double lambda = 0.0;
  double sum() const { return r + lambda; }
};

inline constexpr double kHSeriesThreshold = 1e-4;

// H(g) = (1 - e^{-g})/g, continuously extended to H(0) = 1. Strictly
// decreasing for g > 0 with values in (0, 1]. Below the threshold the Taylor
// series 1 - g/2 + g^2/6 - g^3/24 avoids the 0/0 cancellation.
inline double h_func(double gamma) {
  if (std::abs(gamma) < kHSeriesThreshold)
    return 1.0 - gamma / 2.0 + gamma * gamma / 6.0 -
           gamma * gamma * gamma / 24.0;
  return -std::expm1(-gamma) / gamma;
}

// Infinite-maturity yield per component:
//   R_inf = mu + theta1 kappa11/zeta1 - (kappa11/zeta1)^2 / 2.
inline PerComponent asymptotic_yield(const ModelParams& p) {
  p.validate();
  auto one = [&p](double mu, double zeta1) {
    const double a = p.kappa11 / zeta1;
    return mu + p.theta1 * a - 0.5 * a * a;
  };
  return {one(p.mu_r, p.zeta1_r), one(p.mu_lambda, p.zeta1_lambda)};
}

// Maturity-dependent yield adjustment per component:
//   w(tau) = H(zeta1 tau) [theta1 kappa11/zeta1 - kappa11 kappa12/(zeta1 zeta2)]
//          + H((zeta1+zeta2) tau) kappa11 kappa12 / (2 zeta1 zeta2).
// Vanishes as tau -> inf.
inline PerComponent w_tau(const ModelParams& p, Tenor tau) {
  p.validate();
  const double t = tau.years();
  auto one = [&p, t](double zeta1, double zeta2) {
    const double lead = p.theta1 * p.kappa11 / zeta1;
    const double cross = p.kappa11 * p.kappa12 / (zeta1 * zeta2);
    return h_func(zeta1 * t) * (lead - cross) +
           0.5 * h_func((zeta1 + zeta2) * t) * cross;
  };
  return {one(p.zeta1_r, p.zeta2_r), one(p.zeta1_lambda, p.zeta2_lambda)};
}

// Per-component affine yield R_inf - w(tau) - H(zeta1 tau) x. Well defined
// for tau >= 0; the aggregate ZCLB yield is the sum of the two entries.
inline PerComponent component_yields(const ModelParams& p,
                                     const FactorState& state, Tenor tau) {
  state.validate();
  const PerComponent rinf = asymptotic_yield(p);
  const PerComponent w = w_tau(p, tau);
  const double t = tau.years();
  return {rinf.r - w.r - h_func(p.zeta1_r * t) * state.x_r,
          rinf.lambda - w.lambda -
              h_func(p.zeta1_lambda * t) * state.x_lambda};
}

// Aggregate continuously compounded ZCLB yield. The bond discounts by
// r + lambda, so this is the sum of the component yields. Undefined at
// tau = 0 (use zclb_price, which is exactly 1 there).
inline double zclb_yield(const ModelParams& p, const FactorState& state,
                         Tenor tau) {
  if (tau.years() == 0.0)
    throw std::invalid_argument(
        "zclb_yield: undefined at zero tenor; use zclb_price");
  return component_yields(p, state, tau).sum();
}

// ZCLB price B = exp(-tau * yield); B(0) = 1 exactly.
inline double zclb_price(const ModelParams& p, const FactorState& state,
                         Tenor tau) {
  return std::exp(-tau.years() * component_yields(p, state, tau).sum());
}

struct SurvivalProb {
  double value = 1.0;
  // Set when value > 1, i.e. the Gaussian factor implies a negative
  // mortality intensity over the horizon. Reported, never clamped.
  bool exceeds_one = false;
};

// Survival probability of the reference cohort over tau years: the mortality
// component of the ZCLB discount, exp(-tau * y_lambda(tau)).
inline SurvivalProb survival_prob(const ModelParams& p,
                                  const FactorState& state, Tenor tau) {
  const double v =
      std::exp(-tau.years() * component_yields(p, state, tau).lambda);
  return {v, v > 1.0};
}

}  // namespace zclb
