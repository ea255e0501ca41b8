#ifndef PGIBBS_RESAMPLING_HPP
#define PGIBBS_RESAMPLING_HPP

// Unconditional and conditional resampling, plus the conditional law of one
// ancestor label given all the others (used by backward sampling).
//
// Labels and slots are 0-based. The conditional samplers fix slot 0 to label 0,
// which is where the frozen trajectory lives.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pgibbs/error.hpp"
#include "pgibbs/random.hpp"

namespace pgibbs {

enum class Scheme { multinomial, residual, systematic };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::multinomial: return "multinomial";
    case Scheme::residual: return "residual";
    case Scheme::systematic: return "systematic";
  }
  return "unknown";
}

inline Scheme parse_scheme(std::string_view token) {
  if (token == "multinomial") return Scheme::multinomial;
  if (token == "residual") return Scheme::residual;
  if (token == "systematic") return Scheme::systematic;
  throw ConfigError("unknown resampling scheme '" + std::string(token) +
                    "' (expected multinomial, residual or systematic)");
}

/// Normalized resampling weights: nonnegative, summing to one.
class WeightVector {
 public:
  WeightVector() = default;

  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw ConfigError("weight vector is empty");
    double sum = 0.0;
    for (double v : w_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("weight vector has a negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("weight vector does not sum to one");
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t n) const { return w_[n]; }
  std::span<const double> values() const { return w_; }

 private:
  std::vector<double> w_;
};

/// w^n = G^n / sum_m G^m from log potentials, with max-subtraction.
inline WeightVector normalize_weights(std::span<const double> log_potentials) {
  if (log_potentials.empty()) throw ConfigError("normalize_weights: no potentials");
  const double top = *std::max_element(log_potentials.begin(), log_potentials.end());
  if (!std::isfinite(top)) throw NumericalError("degenerate weights");
  std::vector<double> w(log_potentials.size());
  double sum = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    w[n] = std::exp(log_potentials[n] - top);
    sum += w[n];
  }
  for (double& v : w) v /= sum;
  return WeightVector(std::move(w));
}

/// log((1/N) sum_n exp(l_n)), stable.
inline double log_mean_exp(std::span<const double> log_values) {
  const double top = *std::max_element(log_values.begin(), log_values.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : log_values) sum += std::exp(v - top);
  return top + std::log(sum / static_cast<double>(log_values.size()));
}

using AncestorVector = std::vector<std::size_t>;

/// N-cycle c(n) = (n + offset) mod N, stored as its offset.
class Cycle {
 public:
  Cycle(std::size_t n, std::size_t offset) : n_(n), offset_(offset % n) {}

  std::size_t size() const { return n_; }
  std::size_t offset() const { return offset_; }
  std::size_t operator()(std::size_t slot) const { return (slot + offset_) % n_; }
  Cycle inverse() const { return Cycle(n_, n_ - offset_); }
  Cycle then(const Cycle& next) const { return Cycle(n_, offset_ + next.offset_); }

 private:
  std::size_t n_;
  std::size_t offset_;
};

/// a^n = abar^{c(n)}.
inline AncestorVector apply_cycle(const AncestorVector& abar, const Cycle& c) {
  AncestorVector a(abar.size());
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = abar[c(n)];
  return a;
}

/// Split of N w^n into floor and residue shared by residual and systematic schemes.
struct ResidualDecomposition {
  std::vector<std::size_t> floors;  // deterministic offspring counts
  std::vector<double> residues;     // N w^n - floor
  std::size_t random_count = 0;     // R = N - sum floors
};

/// Values of N w^n within 1e-9 of a positive integer are treated as that integer.
inline double snap_scaled_weight(double scaled) {
  const double nearest = std::round(scaled);
  if (nearest >= 1.0 && std::abs(scaled - nearest) < 1e-9) return nearest;
  return scaled;
}

inline ResidualDecomposition residual_decomposition(const WeightVector& w) {
  const std::size_t n = w.size();
  ResidualDecomposition d;
  d.floors.resize(n);
  d.residues.resize(n);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = snap_scaled_weight(static_cast<double>(n) * w[i]);
    const double f = std::floor(scaled);
    d.floors[i] = static_cast<std::size_t>(f);
    d.residues[i] = scaled - f;
    total += d.floors[i];
  }
  if (total > n) throw NumericalError("residual decomposition: deterministic copies exceed N");
  d.random_count = n - total;
  return d;
}

/// Knots S(0..N) of the systematic segment [0, N): S(k) = N sum_{m<k} w^m, S(N) = N.
inline std::vector<double> systematic_knots(const WeightVector& w) {
  const std::size_t n = w.size();
  std::vector<double> s(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) s[i + 1] = s[i] + snap_scaled_weight(static_cast<double>(n) * w[i]);
  for (std::size_t i = 1; i <= n; ++i) s[i] = std::min(s[i], static_cast<double>(n));
  s[n] = static_cast<double>(n);
  return s;
}

// ---------------------------------------------------------------- unconditional

inline AncestorVector multinomial_resample(const WeightVector& w, Rng& rng) {
  const CategoricalSampler draw(w.values());
  AncestorVector a(w.size());
  for (auto& label : a) label = draw(rng);
  return a;
}

namespace detail {

// floor(N w^n) copies of each label in label order, then `fills` draws from the residues.
inline AncestorVector stack_residual(const ResidualDecomposition& d, std::size_t lead, std::size_t fills,
                                     Rng& rng) {
  const std::size_t n = d.floors.size();
  AncestorVector a;
  a.reserve(n);
  for (std::size_t i = 0; i < lead; ++i) a.push_back(0);
  for (std::size_t label = 0; label < n; ++label) a.insert(a.end(), d.floors[label], label);
  if (fills > 0) {
    const CategoricalSampler draw(d.residues);
    for (std::size_t i = 0; i < fills; ++i) a.push_back(draw(rng));
  }
  return a;
}

}  // namespace detail

/// Residual resampling followed by a uniform random permutation of all slots.
inline AncestorVector residual_resample(const WeightVector& w, Rng& rng) {
  const auto d = residual_decomposition(w);
  auto a = detail::stack_residual(d, 0, d.random_count, rng);
  std::shuffle(a.begin(), a.end(), rng);
  return a;
}

/// Plain systematic labels for a given U in [0,1): nondecreasing, slot j gets
/// the label whose segment contains U + j.
inline AncestorVector systematic_labels(const WeightVector& w, double u) {
  const auto s = systematic_knots(w);
  const std::size_t n = w.size();
  AncestorVector abar(n);
  std::size_t label = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double pos = u + static_cast<double>(j);
    while (label + 1 < n && pos >= s[label + 1]) ++label;
    abar[j] = label;
  }
  return abar;
}

/// Systematic resampling with cycle randomization: A^n = Abar^{C(n)}, C uniform.
inline AncestorVector systematic_resample(const WeightVector& w, Rng& rng) {
  const auto abar = systematic_labels(w, uniform01(rng));
  return apply_cycle(abar, Cycle(w.size(), uniform_index(rng, w.size())));
}

inline AncestorVector resample(Scheme scheme, const WeightVector& w, Rng& rng) {
  switch (scheme) {
    case Scheme::multinomial: return multinomial_resample(w, rng);
    case Scheme::residual: return residual_resample(w, rng);
    case Scheme::systematic: return systematic_resample(w, rng);
  }
  throw ConfigError("resample: unknown scheme");
}

// ------------------------------------------------------------------ conditional

namespace detail {

inline void require_frozen_mass(const WeightVector& w, std::string_view who) {
  if (!(w[0] > 0.0)) {
    throw NumericalError(std::string(who) + ": frozen particle has zero weight, cannot condition on a^0 = 0");
  }
}

}  // namespace detail

/// a^0 = 0, remaining labels i.i.d. from w.
inline AncestorVector conditional_multinomial(const WeightVector& w, Rng& rng) {
  detail::require_frozen_mass(w, "conditional_multinomial");
  const CategoricalSampler draw(w.values());
  AncestorVector a(w.size());
  a[0] = 0;
  for (std::size_t n = 1; n < a.size(); ++n) a[n] = draw(rng);
  return a;
}

/// Residual resampling conditioned on a^0 = 0. `permute` shuffles slots 1..N-1;
/// downstream operations only depend on offspring counts, but the distributional
/// identities of the joint law hold only with it on.
inline AncestorVector conditional_residual(const WeightVector& w, Rng& rng, bool permute = true) {
  detail::require_frozen_mass(w, "conditional_residual");
  const auto d = residual_decomposition(w);
  const double scaled0 = static_cast<double>(d.floors[0]) + d.residues[0];
  AncestorVector a;
  if (d.floors[0] > 0 && bernoulli(rng, static_cast<double>(d.floors[0]) / scaled0)) {
    // slot 0 holds one of the deterministic copies of label 0
    a = detail::stack_residual(d, 0, d.random_count, rng);
  } else {
    // slot 0 holds the random copy of label 0
    if (d.random_count == 0) throw NumericalError("conditional_residual: no random copy available for label 0");
    a = detail::stack_residual(d, 1, d.random_count - 1, rng);
  }
  if (permute) std::shuffle(a.begin() + 1, a.end(), rng);
  return a;
}

/// Systematic resampling with cycle randomization conditioned on a^0 = 0: U is
/// drawn from its posterior given a^0 = 0, then a cycle uniformly among those
/// that put a copy of label 0 in slot 0.
inline AncestorVector conditional_systematic(const WeightVector& w, Rng& rng) {
  detail::require_frozen_mass(w, "conditional_systematic");
  const std::size_t n = w.size();
  const auto knots = systematic_knots(w);
  const double s1 = knots[1];
  const double f = std::floor(s1);
  const double r = s1 - f;
  double u = 0.0;
  if (s1 < 1.0) {
    u = uniform(rng, 0.0, s1);
  } else if (bernoulli(rng, r * (f + 1.0) / s1)) {
    u = uniform(rng, 0.0, r);
  } else {
    u = uniform(rng, r, 1.0);
  }
  const auto abar = systematic_labels(w, u);
  const auto copies = static_cast<std::size_t>(std::count(abar.begin(), abar.end(), std::size_t{0}));
  if (copies == 0) throw NumericalError("conditional_systematic: label 0 received no offspring");
  return apply_cycle(abar, Cycle(n, uniform_index(rng, copies)));
}

inline AncestorVector conditional_resample(Scheme scheme, const WeightVector& w, Rng& rng) {
  switch (scheme) {
    case Scheme::multinomial: return conditional_multinomial(w, rng);
    case Scheme::residual: return conditional_residual(w, rng);
    case Scheme::systematic: return conditional_systematic(w, rng);
  }
  throw ConfigError("conditional_resample: unknown scheme");
}

// ------------------------------------------------------------------ joint laws

/// Probability that plain systematic resampling (before cycling) outputs `abar`:
/// the length of [0,1) intersected with [S(abar^n) - n, S(abar^n + 1) - n) over slots n.
/// Zero for vectors that are not nondecreasing or use zero-weight labels.
inline double systematic_joint_prob(const WeightVector& w, const AncestorVector& abar) {
  const auto s = systematic_knots(w);
  double lo = 0.0;
  double hi = 1.0;
  for (std::size_t n = 0; n < abar.size(); ++n) {
    const double shift = static_cast<double>(n);
    lo = std::max(lo, s[abar[n]] - shift);
    hi = std::min(hi, s[abar[n] + 1] - shift);
  }
  return std::max(0.0, hi - lo);
}

namespace detail {

[[noreturn]] inline void inconsistent(Scheme scheme, std::size_t b, std::string_view why) {
  std::ostringstream os;
  os << "ancestor_conditional_distribution(" << to_string(scheme) << ", slot " << b
     << "): other labels are not reachable under the joint law (" << why << ")";
  throw ConfigError(os.str());
}

inline std::vector<double> point_mass(std::size_t n, std::size_t label) {
  std::vector<double> p(n, 0.0);
  p[label] = 1.0;
  return p;
}

inline std::vector<double> residual_conditional(const WeightVector& w, const AncestorVector& a, std::size_t b) {
  const std::size_t n = w.size();
  const auto d = residual_decomposition(w);
  std::vector<std::size_t> chi(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (k != b) ++chi[a[k]];
  }
  std::size_t short_label = n;
  for (std::size_t m = 0; m < n; ++m) {
    if (chi[m] + 1 < d.floors[m]) inconsistent(Scheme::residual, b, "label below its deterministic count");
    if (chi[m] + 1 == d.floors[m]) {
      if (short_label != n) inconsistent(Scheme::residual, b, "two labels below their deterministic counts");
      short_label = m;
    }
    if (chi[m] > d.floors[m] && d.residues[m] == 0.0) {
      inconsistent(Scheme::residual, b, "random copy of a label with zero residue");
    }
  }
  if (short_label != n) return point_mass(n, short_label);
  std::vector<double> p(n);
  double total = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double extra = static_cast<double>(chi[m] - d.floors[m]);
    p[m] = d.residues[m] * (static_cast<double>(chi[m]) + 1.0) / (extra + 1.0);
    total += p[m];
  }
  if (!(total > 0.0)) inconsistent(Scheme::residual, b, "zero total mass");
  for (double& v : p) v /= total;
  return p;
}

// Systematic conditional helper: for a start slot s (abar^j = a^{(s + j) mod N}),
// J is the intersection of [0,1) with the intervals of every slot except b.
struct SystematicWindow {
  double lo;
  double hi;
  std::size_t b_prime;  // position of slot b inside abar
};

inline SystematicWindow systematic_window(const std::vector<double>& knots, const AncestorVector& a,
                                          std::size_t b, std::size_t start) {
  const std::size_t n = a.size();
  SystematicWindow win{0.0, 1.0, (b + n - start) % n};
  for (std::size_t j = 0; j < n; ++j) {
    if (j == win.b_prime) continue;
    const std::size_t label = a[(start + j) % n];
    const double shift = static_cast<double>(j);
    win.lo = std::max(win.lo, knots[label] - shift);
    win.hi = std::min(win.hi, knots[label + 1] - shift);
  }
  return win;
}

inline double window_mass(const std::vector<double>& knots, const SystematicWindow& win, std::size_t label) {
  const double shift = static_cast<double>(win.b_prime);
  const double lo = std::max(win.lo, knots[label] - shift);
  const double hi = std::min(win.hi, knots[label + 1] - shift);
  return std::max(0.0, hi - lo);
}

inline void add_start(std::vector<double>& p, const std::vector<double>& knots, const AncestorVector& a,
                      std::size_t b, std::size_t start, std::size_t first_label, std::size_t last_label) {
  const auto win = systematic_window(knots, a, b, start);
  if (!(win.hi > win.lo)) return;
  for (std::size_t m = first_label; m <= last_label; ++m) p[m] += window_mass(knots, win, m);
}

inline std::vector<double> systematic_conditional(const WeightVector& w, const AncestorVector& a, std::size_t b) {
  const std::size_t n = w.size();
  if (n == 1) return {1.0};
  const auto knots = systematic_knots(w);
  const auto d = residual_decomposition(w);
  const std::size_t prev = a[(b + n - 1) % n];
  const std::size_t next = a[(b + 1) % n];
  std::vector<double> p(n, 0.0);

  if (prev < next) {
    // The single cyclic descent among the other slots fixes where abar starts.
    std::size_t start = n;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const std::size_t slot = (b + 1 + j) % n;
      if (a[(b + j) % n] > a[slot]) {
        start = slot;
        break;
      }
    }
    if (start == n) inconsistent(Scheme::systematic, b, "no descent among the other labels");
    add_start(p, knots, a, b, start, prev, next);
  } else if (prev > next) {
    add_start(p, knots, a, b, b, 0, n - 1);
    add_start(p, knots, a, b, (b + 1) % n, 0, n - 1);
  } else {
    const std::size_t m = prev;
    bool all_equal = true;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != b && a[k] != m) all_equal = false;
    }
    if (!all_equal) return point_mass(n, m);
    const std::size_t f = d.floors[m];
    if (f == n) return point_mass(n, m);
    if (f + 2 == n) {
      add_start(p, knots, a, b, b, 0, n - 1);
      add_start(p, knots, a, b, (b + 1) % n, 0, n - 1);
    } else if (f + 1 == n) {
      // Every cycle is compatible. Only label m keeps abar constant, and then
      // all N starts give the same vector; any other label is placed at the
      // start (c-) or at the end (c+) of abar.
      add_start(p, knots, a, b, b, 0, n - 1);
      add_start(p, knots, a, b, (b + 1) % n, 0, n - 1);
      const auto win = systematic_window(knots, a, b, b);
      p[m] = static_cast<double>(n) * window_mass(knots, win, m);
    } else {
      inconsistent(Scheme::systematic, b, "N-1 equal labels exceed the label's offspring range");
    }
  }
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) inconsistent(Scheme::systematic, b, "zero total mass");
  for (double& v : p) v /= total;
  return p;
}

}  // namespace detail

/// Law of A^b given A^{-b} = a^{-b} under the scheme's joint resampling law.
/// `a` is a full ancestor vector; a[b] is ignored. O(N).
inline std::vector<double> ancestor_conditional_distribution(Scheme scheme, const WeightVector& w,
                                                             const AncestorVector& a, std::size_t b) {
  if (a.size() != w.size() || b >= a.size()) throw ConfigError("ancestor_conditional_distribution: size mismatch");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k != b && a[k] >= a.size()) throw ConfigError("ancestor_conditional_distribution: label out of range");
  }
  switch (scheme) {
    case Scheme::multinomial: return {w.values().begin(), w.values().end()};
    case Scheme::residual: return detail::residual_conditional(w, a, b);
    case Scheme::systematic: return detail::systematic_conditional(w, a, b);
  }
  throw ConfigError("ancestor_conditional_distribution: unknown scheme");
}

}  // namespace pgibbs

#endif  // PGIBBS_RESAMPLING_HPP
