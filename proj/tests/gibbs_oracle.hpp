#ifndef PGIBBS_TESTS_GIBBS_ORACLE_HPP
#define PGIBBS_TESTS_GIBBS_ORACLE_HPP

// 1-D quadrature oracles for the parameter full conditionals.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "pgibbs/poisson_ar1.hpp"

namespace pgibbs::test_util {

inline double log_normal_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

/// log p(x_{0:T} | mu, rho, sigma2) straight from the model definition.
inline double path_log_likelihood(const Trajectory<double>& x, const PoissonAr1Params& p) {
  double v = log_normal_pdf(x[0], p.mu, p.sigma2);
  for (std::size_t t = 1; t < x.size(); ++t) v += log_normal_pdf(x[t], p.mu + p.rho * (x[t - 1] - p.mu), p.sigma2);
  return v;
}

struct GridMoments {
  double mean;
  double var;
  double mu4;  // fourth central moment
};

/// Composite Simpson quadrature of an unnormalized log density over [lo, hi].
inline GridMoments grid_moments(const std::function<double(double)>& log_density, double lo, double hi,
                                std::size_t cells = 200000) {
  const double h = (hi - lo) / static_cast<double>(cells);
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> lv(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) top = std::max(top, lv[i] = log_density(lo + h * static_cast<double>(i)));
  auto weight = [&](std::size_t i) {
    const double c = (i == 0 || i == cells) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    return c * std::exp(lv[i] - top);
  };
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i <= cells; ++i) {
    m0 += weight(i);
    m1 += weight(i) * (lo + h * static_cast<double>(i));
  }
  const double mean = m1 / m0;
  double c2 = 0.0, c4 = 0.0;
  for (std::size_t i = 0; i <= cells; ++i) {
    const double d = lo + h * static_cast<double>(i) - mean;
    c2 += weight(i) * d * d;
    c4 += weight(i) * d * d * d * d;
  }
  return {mean, c2 / m0, c4 / m0};
}

}  // namespace pgibbs::test_util

#endif  // PGIBBS_TESTS_GIBBS_ORACLE_HPP
