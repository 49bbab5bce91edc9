#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace zclb {

struct NelderMeadOptions {
  double tolerance = 1e-8;     // absolute spread |f_worst - f_best| at stop
  int max_iterations = 1000;
  double initial_step = 0.25;  // per-coordinate offset of the start simplex
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fx = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Downhill simplex minimizer with the standard coefficients: reflection 1,
// expansion 2, contraction 1/2, shrink 1/2. Non-finite objective values are
// treated as +inf, so the simplex backs away from invalid regions.
template <class F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");

  constexpr double alpha = 1.0;  // reflection
  constexpr double gamma = 2.0;  // expansion
  constexpr double rho = 0.5;    // contraction
  constexpr double sigma = 0.5;  // shrink

  NelderMeadResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> fv(static_cast<std::size_t>(n) + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    pts[static_cast<std::size_t>(i) + 1](i) += opt.initial_step;
  for (std::size_t i = 0; i < pts.size(); ++i) fv[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  auto sort_simplex = [&] {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
  };

  for (res.iterations = 0; res.iterations < opt.max_iterations;
       ++res.iterations) {
    sort_simplex();
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];

    if (std::isfinite(fv[best]) && std::isfinite(fv[worst]) &&
        fv[worst] - fv[best] < opt.tolerance) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < order.size(); ++i)
      if (order[i] != worst) centroid += pts[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
    const double fr = eval(xr);

    if (fr < fv[best]) {
      const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second_worst]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }

    // Contraction, outside if the reflected point improved on the worst.
    Eigen::VectorXd xc;
    if (fr < fv[worst])
      xc = centroid + rho * (xr - centroid);
    else
      xc = centroid + rho * (pts[worst] - centroid);
    const double fc = eval(xc);
    if (fc < std::min(fr, fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }

    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] == best) continue;
      pts[order[i]] = pts[best] + sigma * (pts[order[i]] - pts[best]);
      fv[order[i]] = eval(pts[order[i]]);
    }
  }

  sort_simplex();
  res.x = pts[order.front()];
  res.fx = fv[order.front()];
  return res;
}

}  // namespace zclb
