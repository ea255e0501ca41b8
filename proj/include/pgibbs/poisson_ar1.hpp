#ifndef PGIBBS_POISSON_AR1_HPP
#define PGIBBS_POISSON_AR1_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/random.hpp"

namespace pgibbs {

/// Latent Gaussian AR(1): x_0 ~ N(mu, sigma2), x_{t+1} | x_t ~ N(mu + rho (x_t - mu), sigma2).
struct PoissonAr1Params {
  double mu = 0.0;
  double rho = 0.9;
  double sigma2 = 0.25;

  void validate() const {
    std::ostringstream os;
    if (!std::isfinite(mu)) os << " mu is not finite;";
    if (!std::isfinite(rho) || std::abs(rho) > 1.0) os << " rho must lie in [-1, 1];";
    if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) os << " sigma2 must be finite and > 0;";
    if (!os.str().empty()) throw ConfigError("invalid AR(1) parameters:" + os.str());
  }
};

/// Observed counts y_{0:T}.
struct Dataset {
  std::vector<std::int64_t> counts;

  std::size_t size() const { return counts.size(); }
  std::size_t horizon() const { return counts.size() - 1; }
};

/// log G_t(x) = -exp(x) + y x. The log(y!) constant is dropped; it cancels in
/// every normalized weight and acceptance ratio.
inline double poisson_log_potential(std::size_t /*t*/, double x, std::int64_t y) {
  return -std::exp(x) + static_cast<double>(y) * x;
}

/// Y_t | X_t = x ~ Poisson(exp(x)) observed through an AR(1) latent chain.
class PoissonAr1Model {
 public:
  using state_type = double;

  PoissonAr1Model(PoissonAr1Params params, std::shared_ptr<const Dataset> data)
      : params_(params), data_(std::move(data)) {
    params_.validate();
    if (!data_ || data_->counts.empty()) throw ConfigError("poisson_ar1: dataset is empty");
    sd_ = std::sqrt(params_.sigma2);
    log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * params_.sigma2);
  }

  const PoissonAr1Params& params() const { return params_; }
  const Dataset& data() const { return *data_; }
  std::size_t horizon() const { return data_->horizon(); }

  double sample_initial(Rng& rng) const { return params_.mu + sd_ * std::normal_distribution<double>()(rng); }

  double sample_transition(std::size_t /*t*/, double from, Rng& rng) const {
    return mean_after(from) + sd_ * std::normal_distribution<double>()(rng);
  }

  double log_potential(std::size_t t, double x) const { return poisson_log_potential(t, x, data_->counts[t]); }

  double transition_log_density(std::size_t /*t*/, double from, double to) const {
    const double d = to - mean_after(from);
    return log_norm_ - 0.5 * d * d / params_.sigma2;
  }

 private:
  double mean_after(double x) const { return params_.mu + params_.rho * (x - params_.mu); }

  PoissonAr1Params params_;
  std::shared_ptr<const Dataset> data_;
  double sd_ = 0.0;
  double log_norm_ = 0.0;
};

static_assert(HasTransitionDensity<PoissonAr1Model>);

/// Draws a latent path x_{0:T} and counts y_{0:T} from the model; T is the horizon.
inline std::pair<Trajectory<double>, Dataset> simulate_dataset(const PoissonAr1Params& params, std::size_t T,
                                                               Rng& rng) {
  params.validate();
  const double sd = std::sqrt(params.sigma2);
  std::normal_distribution<double> normal;
  Trajectory<double> x(T + 1);
  Dataset data;
  data.counts.resize(T + 1);
  x[0] = params.mu + sd * normal(rng);
  for (std::size_t t = 1; t <= T; ++t) x[t] = params.mu + params.rho * (x[t - 1] - params.mu) + sd * normal(rng);
  for (std::size_t t = 0; t <= T; ++t) {
    const double rate = std::exp(x[t]);
    if (!std::isfinite(rate)) throw NumericalError("simulate_dataset: Poisson rate overflows at t = " + std::to_string(t));
    data.counts[t] = rate > 0.0 ? std::poisson_distribution<std::int64_t>(rate)(rng) : 0;
  }
  return {std::move(x), std::move(data)};
}

}  // namespace pgibbs

#endif  // PGIBBS_POISSON_AR1_HPP
