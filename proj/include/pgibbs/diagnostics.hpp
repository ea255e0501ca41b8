#ifndef PGIBBS_DIAGNOSTICS_HPP
#define PGIBBS_DIAGNOSTICS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"

namespace pgibbs {

/// Biased (1/n) sample autocorrelation for lags 0..max_lag.
inline std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n < 2) throw ConfigError("acf: need at least two samples");
  if (max_lag >= n) throw ConfigError("acf: max_lag must be smaller than the series length");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) throw NumericalError("constant series");
  std::vector<double> out(max_lag + 1);
  out[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) num += (series[i] - mean) * (series[i + k] - mean);
    out[k] = num / denom;
  }
  return out;
}

/// Streams paths and counts, per time index, how often consecutive paths differ.
/// Equality is exact: an unmoved path is carried over verbatim.
template <typename State>
class UpdateRateAccumulator {
 public:
  void add(const Trajectory<State>& path) {
    if (!previous_.empty()) {
      if (path.size() != previous_.size()) throw ConfigError("update_rate: paths of different lengths");
      for (std::size_t t = 0; t < path.size(); ++t) {
        if (!(path[t] == previous_[t])) ++changes_[t];
      }
      ++pairs_;
    } else {
      changes_.assign(path.size(), 0);
    }
    previous_ = path;
  }

  std::size_t pairs() const { return pairs_; }

  std::vector<double> rates() const {
    if (pairs_ == 0) throw ConfigError("update_rate: need at least two samples");
    std::vector<double> r(changes_.size());
    for (std::size_t t = 0; t < r.size(); ++t) r[t] = static_cast<double>(changes_[t]) / static_cast<double>(pairs_);
    return r;
  }

 private:
  Trajectory<State> previous_;
  std::vector<std::size_t> changes_;
  std::size_t pairs_ = 0;
};

/// Per-t fraction of consecutive samples in which x_t changes value.
template <typename State>
std::vector<double> update_rate(std::span<const Trajectory<State>> paths) {
  UpdateRateAccumulator<State> acc;
  for (const auto& p : paths) acc.add(p);
  return acc.rates();
}

/// Mean squared jump (h_{i+1} - h_i)^2.
inline double msjd(std::span<const double> values) {
  if (values.size() < 2) throw ConfigError("msjd: need at least two samples");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double d = values[i + 1] - values[i];
    s += d * d;
  }
  return s / static_cast<double>(values.size() - 1);
}

}  // namespace pgibbs

#endif  // PGIBBS_DIAGNOSTICS_HPP
