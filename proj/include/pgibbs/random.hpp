#ifndef PGIBBS_RANDOM_HPP
#define PGIBBS_RANDOM_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace pgibbs {

/// Every sampler in the library draws from an explicit engine of this type.
using Rng = std::mt19937_64;

/// Independent stream for chain/replicate `index` derived from a base seed.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// Uniform on [0,1) with 53 random bits; never returns 1.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on [lo, hi).
inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Inverse-CDF sampler over nonnegative (not necessarily normalized) masses.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> masses) : cumulative_(masses.size()) {
    std::partial_sum(masses.begin(), masses.end(), cumulative_.begin());
  }

  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  std::size_t operator()(Rng& rng) const {
    const double u = uniform01(rng) * total();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) {
      // u landed on the top edge through rounding; take the last positive mass.
      it = std::prev(std::lower_bound(cumulative_.begin(), cumulative_.end(), total()) + 1);
    }
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

inline std::size_t sample_categorical(std::span<const double> masses, Rng& rng) {
  return CategoricalSampler(masses)(rng);
}

}  // namespace pgibbs

#endif  // PGIBBS_RANDOM_HPP
