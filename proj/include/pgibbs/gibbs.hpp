#ifndef PGIBBS_GIBBS_HPP
#define PGIBBS_GIBBS_HPP

// Particle Gibbs within a parameter Gibbs sampler for the Poisson-count AR(1)
// model: sigma2, rho and mu are refreshed from their full conditionals given
// the latent path, then the path is refreshed by one CPF step.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "pgibbs/cpf.hpp"
#include "pgibbs/error.hpp"
#include "pgibbs/poisson_ar1.hpp"
#include "pgibbs/random.hpp"

namespace pgibbs {

/// mu ~ N(m_mu, s_mu^2), rho ~ U[-1, 1], 1/sigma2 ~ Gamma(a_sigma, rate b_sigma).
struct PriorSpec {
  double m_mu = 0.0;
  double s_mu = 10.0;
  double a_sigma = 1.0;
  double b_sigma = 1.0;

  void validate() const {
    if (!std::isfinite(m_mu) || !(s_mu > 0.0) || !(a_sigma > 0.0) || !(b_sigma > 0.0)) {
      throw ConfigError("prior: need finite m_mu and s_mu, a_sigma, b_sigma > 0");
    }
  }
};

struct GibbsState {
  PoissonAr1Params params;
  Trajectory<double> path;
};

/// Standard normal CDF and its complement, accurate in both tails.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_ccdf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// Inverse-CDF draw from N(mean, sd^2) truncated to [lo, hi]. Works on the
/// tail nearest to the interval so that intervals far in either tail keep
/// full precision.
inline double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
  if (!(sd > 0.0) || !std::isfinite(mean)) throw NumericalError("truncated normal: invalid mean or scale");
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  const double u = uniform01(rng);
  double z = 0.0;
  if (a > 0.0) {
    // Both bounds in the upper tail: invert the survival function.
    const double qa = normal_ccdf(a);
    const double qb = normal_ccdf(b);
    const double q = qa - u * (qa - qb);
    if (!(qa > qb) || !(q > 0.0)) return lo;
    z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
  } else {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    const double p = pa + u * (pb - pa);
    if (!(pb > pa) || !(p > 0.0)) return b <= 0.0 ? hi : lo;
    z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
  }
  return std::clamp(mean + sd * z, lo, hi);
}

/// sigma2 from 1/sigma2 ~ Gamma(a + (T+1)/2, b + x~_0^2/2 + sum_t (x~_{t+1} - rho x~_t)^2 / 2), x~ = x - mu.
inline double sample_precision(const Trajectory<double>& path, const PoissonAr1Params& params,
                               const PriorSpec& prior, Rng& rng) {
  const double x0 = path[0] - params.mu;
  double ss = x0 * x0;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) {
    const double r = (path[t + 1] - params.mu) - params.rho * (path[t] - params.mu);
    ss += r * r;
  }
  const double shape = prior.a_sigma + 0.5 * static_cast<double>(path.size());
  const double rate = prior.b_sigma + 0.5 * ss;
  if (!std::isfinite(rate)) throw NumericalError("sample_precision: non-finite rate");
  const double precision = std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
  return 1.0 / precision;
}

/// rho ~ N(sum x~_t x~_{t+1} / sum x~_t^2, sigma2 / sum x~_t^2) truncated to [-1, 1].
inline double sample_rho(const Trajectory<double>& path, const PoissonAr1Params& params, const PriorSpec& /*prior*/,
                         Rng& rng) {
  double cross = 0.0;
  double ss = 0.0;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) {
    const double a = path[t] - params.mu;
    cross += a * (path[t + 1] - params.mu);
    ss += a * a;
  }
  if (!(ss > 0.0)) throw NumericalError("degenerate rho conditional");
  return sample_truncated_normal(cross / ss, std::sqrt(params.sigma2 / ss), -1.0, 1.0, rng);
}

/// mu ~ N(mean, 1 / lambda) with lambda = 1/s^2 + (1 + T (1 - rho)^2) / sigma2 and
/// mean = (m/s^2 + (x_0 + (1 - rho) sum_t (x_{t+1} - rho x_t)) / sigma2) / lambda.
inline double sample_mu(const Trajectory<double>& path, const PoissonAr1Params& params, const PriorSpec& prior,
                        Rng& rng) {
  const double horizon = static_cast<double>(path.size() - 1);
  const double one_minus_rho = 1.0 - params.rho;
  double innovations = 0.0;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) innovations += path[t + 1] - params.rho * path[t];
  const double prior_precision = 1.0 / (prior.s_mu * prior.s_mu);
  const double lambda = prior_precision + (1.0 + horizon * one_minus_rho * one_minus_rho) / params.sigma2;
  const double mean = (prior.m_mu * prior_precision + (path[0] + one_minus_rho * innovations) / params.sigma2) / lambda;
  return mean + std::normal_distribution<double>()(rng) / std::sqrt(lambda);
}

struct SweepOutput {
  GibbsState state;
  bool moved = false;
  std::size_t selected_index = 0;
};

/// sigma2 -> rho -> mu -> CPF step on the path under the updated parameters.
inline SweepOutput pg_gibbs_sweep(const std::shared_ptr<const Dataset>& data, const GibbsState& state,
                                  const CpfConfig& config, const PriorSpec& prior, Rng& rng) {
  if (state.path.size() != data->size()) throw ConfigError("pg_gibbs_sweep: path length differs from dataset");
  SweepOutput out;
  out.state.params = state.params;
  out.state.params.sigma2 = sample_precision(state.path, out.state.params, prior, rng);
  out.state.params.rho = sample_rho(state.path, out.state.params, prior, rng);
  out.state.params.mu = sample_mu(state.path, out.state.params, prior, rng);
  const PoissonAr1Model model(out.state.params, data);
  auto step = cpf_step(model, config, state.path, rng);
  out.state.path = std::move(step.new_trajectory);
  out.moved = step.moved;
  out.selected_index = step.selected_index;
  return out;
}

}  // namespace pgibbs

#endif  // PGIBBS_GIBBS_HPP
