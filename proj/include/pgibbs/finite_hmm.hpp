#ifndef PGIBBS_FINITE_HMM_HPP
#define PGIBBS_FINITE_HMM_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/random.hpp"

namespace pgibbs {

/// Finite-state hidden Markov model with a time-homogeneous transition matrix
/// and a per-time potential table. States are labels 0..K-1.
class FiniteHmm {
 public:
  using state_type = std::size_t;
  using Matrix = std::vector<std::vector<double>>;

  /// `potentials[t][k]` is G_t(k) (linear scale, strictly positive) for t in 0..T.
  FiniteHmm(std::vector<double> initial, Matrix transition, Matrix potentials)
      : initial_(std::move(initial)), transition_(std::move(transition)) {
    const std::size_t k = initial_.size();
    if (k == 0) throw ConfigError("finite_hmm: need at least one state");
    if (potentials.empty()) throw ConfigError("finite_hmm: potential table needs at least one time step");
    check_distribution(initial_, "initial distribution");
    if (transition_.size() != k) throw ConfigError("finite_hmm: transition matrix must be K x K");
    for (std::size_t i = 0; i < k; ++i) {
      if (transition_[i].size() != k) throw ConfigError("finite_hmm: transition matrix must be K x K");
      check_distribution(transition_[i], "transition row " + std::to_string(i));
    }
    log_potentials_.resize(potentials.size());
    for (std::size_t t = 0; t < potentials.size(); ++t) {
      if (potentials[t].size() != k) throw ConfigError("finite_hmm: potential table must be (T+1) x K");
      for (std::size_t j = 0; j < k; ++j) {
        const double g = potentials[t][j];
        if (!(g > 0.0) || !std::isfinite(g)) {
          std::ostringstream os;
          os << "finite_hmm: potential G_" << t << "(" << j << ") = " << g << " is not strictly positive";
          throw ConfigError(os.str());
        }
        log_potentials_[t].push_back(std::log(g));
      }
    }
  }

  std::size_t horizon() const { return log_potentials_.size() - 1; }
  std::size_t num_states() const { return initial_.size(); }

  const std::vector<double>& initial() const { return initial_; }
  const Matrix& transition() const { return transition_; }
  double potential(std::size_t t, std::size_t k) const { return std::exp(log_potentials_[t][k]); }

  std::size_t sample_initial(Rng& rng) const { return sample_categorical(initial_, rng); }

  std::size_t sample_transition(std::size_t /*t*/, std::size_t from, Rng& rng) const {
    return sample_categorical(transition_[from], rng);
  }

  double log_potential(std::size_t t, std::size_t k) const { return log_potentials_[t][k]; }

  double initial_log_density(std::size_t k) const { return std::log(initial_[k]); }

  double transition_log_density(std::size_t /*t*/, std::size_t from, std::size_t to) const {
    return std::log(transition_[from][to]);
  }

 private:
  static void check_distribution(const std::vector<double>& p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("finite_hmm: negative entry in " + what);
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << "finite_hmm: " << what << " sums to " << sum << ", not 1";
      throw ConfigError(os.str());
    }
  }

  std::vector<double> initial_;
  Matrix transition_;
  std::vector<std::vector<double>> log_potentials_;
};

/// Builds a finite HMM with horizon T from a potential row reused at every time.
inline FiniteHmm finite_hmm(std::size_t T, std::vector<double> initial, FiniteHmm::Matrix transition,
                            const std::vector<double>& potential_row) {
  return FiniteHmm(std::move(initial), std::move(transition), FiniteHmm::Matrix(T + 1, potential_row));
}

static_assert(FiniteModel<FiniteHmm>);

}  // namespace pgibbs

#endif  // PGIBBS_FINITE_HMM_HPP
