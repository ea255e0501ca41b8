#ifndef PGIBBS_ORACLE_HPP
#define PGIBBS_ORACLE_HPP

// Exact brute-force machinery for finite models: the path law Q_T, its
// normalizer, and dense transition matrices of the CPF kernels obtained by
// summing over every discrete outcome of the algorithm.
//
// Trajectories are indexed lexicographically with x_0 most significant:
// index(x) = sum_t x_t K^(T - t).
//
// Q_T(x) is proportional to m_0(x_0) prod_{t>=1} m_t(x_{t-1}, x_t) prod_{t=0..T} G_t(x_t);
// the final potential is included because the kernel selects its output with W_T.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "pgibbs/cpf.hpp"
#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/resampling.hpp"
#include "pgibbs/smc.hpp"

namespace pgibbs::oracle {

inline std::size_t checked_power(std::size_t base, std::size_t exponent, std::size_t cap, std::string_view what) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (v > cap / std::max<std::size_t>(base, 1)) throw ConfigError(std::string(what) + ": enumeration size cap exceeded");
    v *= base;
  }
  return v;
}

inline Trajectory<std::size_t> path_from_index(std::size_t num_states, std::size_t horizon, std::size_t index) {
  Trajectory<std::size_t> x(horizon + 1);
  for (std::size_t t = horizon + 1; t-- > 0;) {
    x[t] = index % num_states;
    index /= num_states;
  }
  return x;
}

inline std::size_t path_index(std::size_t num_states, const Trajectory<std::size_t>& x) {
  std::size_t index = 0;
  for (std::size_t v : x) index = index * num_states + v;
  return index;
}

struct ExactDistribution {
  std::size_t num_states = 0;
  std::size_t horizon = 0;
  std::vector<double> probs;  // indexed as path_index
  double normalizer = 0.0;    // Z_T

  std::size_t size() const { return probs.size(); }
  Trajectory<std::size_t> path(std::size_t i) const { return path_from_index(num_states, horizon, i); }
};

/// Dense row-stochastic matrix over enumerated trajectories.
struct ExactKernel {
  std::size_t n = 0;
  std::vector<double> data;

  explicit ExactKernel(std::size_t size = 0) : n(size), data(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }

  static ExactKernel identity(std::size_t size) {
    ExactKernel k(size);
    for (std::size_t i = 0; i < size; ++i) k(i, i) = 1.0;
    return k;
  }
};

/// Unnormalized path mass m_0 prod m_t prod G_t of a single path.
template <FiniteModel M>
double path_mass(const M& model, const Trajectory<std::size_t>& x) {
  double log_mass = model.initial_log_density(x[0]) + model.log_potential(0, x[0]);
  for (std::size_t t = 1; t < x.size(); ++t) {
    log_mass += model.transition_log_density(t, x[t - 1], x[t]) + model.log_potential(t, x[t]);
  }
  return std::exp(log_mass);
}

/// Q_T and Z_T by summing every one of the K^(T+1) paths.
template <FiniteModel M>
ExactDistribution brute_force_q(const M& model, std::size_t max_paths = 100000) {
  ExactDistribution q;
  q.num_states = model.num_states();
  q.horizon = model.horizon();
  const std::size_t count = checked_power(q.num_states, q.horizon + 1, max_paths, "brute_force_q");
  q.probs.resize(count);
  for (std::size_t i = 0; i < count; ++i) q.probs[i] = path_mass(model, q.path(i));
  q.normalizer = std::accumulate(q.probs.begin(), q.probs.end(), 0.0);
  for (double& p : q.probs) p /= q.normalizer;
  return q;
}

/// Z_T by the sum-product (forward) recursion; an independent route to brute_force_q's normalizer.
template <FiniteModel M>
double forward_normalizer(const M& model) {
  const std::size_t k = model.num_states();
  std::vector<double> alpha(k);
  for (std::size_t j = 0; j < k; ++j) alpha[j] = std::exp(model.initial_log_density(j) + model.log_potential(0, j));
  for (std::size_t t = 1; t <= model.horizon(); ++t) {
    std::vector<double> next(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) next[j] += alpha[i] * std::exp(model.transition_log_density(t, i, j));
    }
    for (std::size_t j = 0; j < k; ++j) next[j] *= std::exp(model.log_potential(t, j));
    alpha = std::move(next);
  }
  return std::accumulate(alpha.begin(), alpha.end(), 0.0);
}

// ------------------------------------------------------- exact resampling laws

/// Dense law over ancestor vectors in [N]^N, indexed with slot 0 most significant.
struct ResamplingLaw {
  std::size_t n = 0;
  std::vector<double> probs;

  std::size_t encode(const AncestorVector& a) const {
    std::size_t index = 0;
    for (std::size_t v : a) index = index * n + v;
    return index;
  }
  AncestorVector decode(std::size_t index) const {
    AncestorVector a(n);
    for (std::size_t s = n; s-- > 0;) {
      a[s] = index % n;
      index /= n;
    }
    return a;
  }
  double operator()(const AncestorVector& a) const { return probs[encode(a)]; }
};

namespace detail {

inline void for_each_sequence(std::size_t length, std::size_t base, const std::function<void(const AncestorVector&)>& f) {
  AncestorVector seq(length, 0);
  while (true) {
    f(seq);
    std::size_t pos = length;
    while (pos > 0) {
      --pos;
      if (++seq[pos] < base) break;
      seq[pos] = 0;
      if (pos == 0) return;
    }
    if (length == 0) return;
  }
}

}  // namespace detail

/// Exact joint law of the scheme's ancestor vector for weights w, N <= 5.
///   multinomial: product of weights.
///   residual: every ordered sequence of the R residue draws, then every permutation.
///   systematic: U integrated exactly over the sub-intervals of [0,1) on which the
///     plain labels are constant, then each of the N cycles with mass 1/N.
inline ResamplingLaw exact_resampling_law(Scheme scheme, const WeightVector& w) {
  const std::size_t n = w.size();
  if (n > 5) throw ConfigError("exact_resampling_law: N > 5 is not enumerable");
  ResamplingLaw law{n, std::vector<double>(checked_power(n, n, 1u << 20, "exact_resampling_law"), 0.0)};
  switch (scheme) {
    case Scheme::multinomial: {
      for (std::size_t i = 0; i < law.probs.size(); ++i) {
        double p = 1.0;
        for (std::size_t v : law.decode(i)) p *= w[v];
        law.probs[i] = p;
      }
      break;
    }
    case Scheme::residual: {
      const auto d = residual_decomposition(w);
      double residue_total = 0.0;
      for (double r : d.residues) residue_total += r;
      AncestorVector stacked;
      for (std::size_t label = 0; label < n; ++label) stacked.insert(stacked.end(), d.floors[label], label);
      std::vector<std::size_t> perm(n);
      double perm_count = 1.0;
      for (std::size_t i = 2; i <= n; ++i) perm_count *= static_cast<double>(i);
      detail::for_each_sequence(d.random_count, n, [&](const AncestorVector& fills) {
        double p = 1.0;
        for (std::size_t v : fills) p *= d.residues[v] / residue_total;
        if (p == 0.0) return;
        AncestorVector full = stacked;
        full.insert(full.end(), fills.begin(), fills.end());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        do {
          AncestorVector a(n);
          for (std::size_t s = 0; s < n; ++s) a[s] = full[perm[s]];
          law.probs[law.encode(a)] += p / perm_count;
        } while (std::next_permutation(perm.begin(), perm.end()));
      });
      break;
    }
    case Scheme::systematic: {
      const auto knots = systematic_knots(w);
      std::vector<double> cuts{0.0, 1.0};
      for (double s : knots) {
        const double frac = s - std::floor(s);
        if (frac > 0.0 && frac < 1.0) cuts.push_back(frac);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double length = cuts[i + 1] - cuts[i];
        if (!(length > 0.0)) continue;
        const auto abar = systematic_labels(w, 0.5 * (cuts[i] + cuts[i + 1]));
        for (std::size_t k = 0; k < n; ++k) {
          law.probs[law.encode(apply_cycle(abar, Cycle(n, k)))] += length / static_cast<double>(n);
        }
      }
      break;
    }
  }
  return law;
}

/// The joint law restricted to a^0 = 0 and renormalized.
inline ResamplingLaw exact_conditional_law(const ResamplingLaw& joint) {
  ResamplingLaw cond{joint.n, std::vector<double>(joint.probs.size(), 0.0)};
  double total = 0.0;
  for (std::size_t i = 0; i < joint.probs.size(); ++i) {
    if (joint.decode(i)[0] == 0) {
      cond.probs[i] = joint.probs[i];
      total += joint.probs[i];
    }
  }
  if (!(total > 0.0)) throw NumericalError("exact_conditional_law: a^0 = 0 has zero probability");
  for (double& p : cond.probs) p /= total;
  return cond;
}

/// P(A^b = m | A^{-b} = a^{-b}) read off the dense joint law.
inline std::vector<double> exact_ancestor_conditional(const ResamplingLaw& joint, AncestorVector a, std::size_t b) {
  std::vector<double> p(joint.n);
  double total = 0.0;
  for (std::size_t m = 0; m < joint.n; ++m) {
    a[b] = m;
    p[m] = joint(a);
    total += p[m];
  }
  if (!(total > 0.0)) throw ConfigError("exact_ancestor_conditional: conditioning event has zero probability");
  for (double& v : p) v /= total;
  return p;
}

// -------------------------------------------------------- CPF system enumeration

/// Every (clouds, genealogy) outcome of the conditional forward pass with its exact probability.
/// The visitor also receives the joint resampling law used at each t, so that
/// backward-sampling conditionals can be evaluated without the sampler code.
template <FiniteModel M, typename Visitor>
void enumerate_cpf_systems(const M& model, std::size_t n, Scheme scheme, const Trajectory<std::size_t>& frozen,
                           Visitor&& visit, std::size_t atom_cap = 10000000) {
  const std::size_t horizon = model.horizon();
  const std::size_t k = model.num_states();
  if (frozen.size() != horizon + 1) throw ConfigError("enumerate_cpf_systems: frozen path has the wrong length");
  if (n < 2 || n > 4) throw ConfigError("enumerate_cpf_systems: supported for 2 <= N <= 4");
  const std::size_t free_states = checked_power(k, n - 1, atom_cap, "enumerate_cpf_systems");
  std::size_t atoms = 0;

  ParticleSystem<std::size_t> sys = pgibbs::detail::empty_system<std::size_t>(horizon, n);
  std::vector<ResamplingLaw> joints(horizon);

  auto fill_potentials = [&](std::size_t t) {
    for (std::size_t s = 0; s < n; ++s) sys.log_potentials[t][s] = model.log_potential(t, sys.clouds[t][s]);
  };

  std::function<void(std::size_t, double)> descend = [&](std::size_t t, double prob) {
    if (t == horizon) {
      if (++atoms > atom_cap) throw ConfigError("enumerate_cpf_systems: enumeration size cap exceeded");
      visit(static_cast<const ParticleSystem<std::size_t>&>(sys), joints, prob);
      return;
    }
    const auto w = normalize_weights(sys.log_potentials[t]);
    joints[t] = exact_resampling_law(scheme, w);
    const auto cond = exact_conditional_law(joints[t]);
    for (std::size_t ai = 0; ai < cond.probs.size(); ++ai) {
      const double pa = cond.probs[ai];
      if (pa == 0.0) continue;
      sys.genealogy[t] = cond.decode(ai);
      sys.clouds[t + 1][0] = frozen[t + 1];
      for (std::size_t si = 0; si < free_states; ++si) {
        double p = pa;
        std::size_t code = si;
        for (std::size_t s = n - 1; s >= 1; --s) {
          const std::size_t to = code % k;
          code /= k;
          sys.clouds[t + 1][s] = to;
          p *= std::exp(model.transition_log_density(t + 1, sys.clouds[t][sys.genealogy[t][s]], to));
        }
        if (p == 0.0) continue;
        fill_potentials(t + 1);
        descend(t + 1, prob * p);
      }
    }
  };

  sys.clouds[0][0] = frozen[0];
  for (std::size_t si = 0; si < free_states; ++si) {
    double p = 1.0;
    std::size_t code = si;
    for (std::size_t s = n - 1; s >= 1; --s) {
      sys.clouds[0][s] = code % k;
      code /= k;
      p *= std::exp(model.initial_log_density(sys.clouds[0][s]));
    }
    if (p == 0.0) continue;
    fill_potentials(0);
    descend(0, p);
  }
}

/// Exact law of the index chosen at the final time (plain or forced-move selection).
inline std::vector<double> selection_law(const WeightVector& w, bool forced_move) {
  const std::size_t n = w.size();
  std::vector<double> p(w.values().begin(), w.values().end());
  if (!forced_move) return p;
  double others = 0.0;
  for (std::size_t s = 1; s < n; ++s) others += w[s];
  std::fill(p.begin(), p.end(), 0.0);
  if (!(others > 0.0)) {
    p[0] = 1.0;
    return p;
  }
  for (std::size_t s = 1; s < n; ++s) {
    const double propose = w[s] / others;
    const double accept = std::min(1.0, others / (1.0 - w[s]));
    p[s] = propose * accept;
    p[0] += propose * (1.0 - accept);
  }
  return p;
}

/// Dense CPF kernel P(z, z') by summing over the forward pass, the index selection and, with backward
/// sampling, every backward label choice. Residual and systematic schemes are
/// enumerated through their exact joint laws.
template <FiniteModel M>
ExactKernel exact_cpf_kernel(const M& model, const CpfConfig& config, std::size_t atom_cap = 10000000) {
  const std::size_t k = model.num_states();
  const std::size_t horizon = model.horizon();
  const std::size_t n = config.n_particles;
  const std::size_t paths = checked_power(k, horizon + 1, 100000, "exact_cpf_kernel");
  ExactKernel kernel(paths);
  Trajectory<std::size_t> out(horizon + 1);

  for (std::size_t row = 0; row < paths; ++row) {
    const auto frozen = path_from_index(k, horizon, row);
    enumerate_cpf_systems(
        model, n, config.scheme, frozen,
        [&](const ParticleSystem<std::size_t>& sys, const std::vector<ResamplingLaw>& joints, double prob) {
          const auto sel = selection_law(normalize_weights(sys.log_potentials[horizon]), config.forced_move);
          for (std::size_t star = 0; star < n; ++star) {
            if (sel[star] == 0.0) continue;
            if (!config.backward_sampling) {
              const auto trace = trace_ancestry(sys, star);
              kernel(row, path_index(k, extract_trajectory(sys, trace))) += prob * sel[star];
              continue;
            }
            out[horizon] = sys.clouds[horizon][star];
            std::function<void(std::size_t, std::size_t, double)> back = [&](std::size_t t, std::size_t child,
                                                                             double p) {
              out[t + 1] = sys.clouds[t + 1][child];
              const auto prior = exact_ancestor_conditional(joints[t], sys.genealogy[t], child);
              std::vector<double> mass(n);
              double total = 0.0;
              for (std::size_t m = 0; m < n; ++m) {
                mass[m] = prior[m] *
                          std::exp(model.transition_log_density(t + 1, sys.clouds[t][m], sys.clouds[t + 1][child]));
                total += mass[m];
              }
              for (std::size_t m = 0; m < n; ++m) {
                if (mass[m] == 0.0) continue;
                const double pm = p * mass[m] / total;
                out[t] = sys.clouds[t][m];
                if (t == 0) {
                  kernel(row, path_index(k, out)) += pm;
                } else {
                  back(t - 1, m, pm);
                }
              }
            };
            if (horizon == 0) {
              kernel(row, path_index(k, out)) += prob * sel[star];
            } else {
              back(horizon - 1, star, prob * sel[star]);
            }
          }
        },
        atom_cap);
  }
  return kernel;
}

// ------------------------------------------------------------- kernel metrics

/// || dist * kernel - dist ||_inf
inline double stationarity_gap(const ExactKernel& kernel, const std::vector<double>& dist) {
  double gap = 0.0;
  for (std::size_t j = 0; j < kernel.n; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < kernel.n; ++i) v += dist[i] * kernel(i, j);
    gap = std::max(gap, std::abs(v - dist[j]));
  }
  return gap;
}

/// max_{z, z'} | dist(z) K(z, z') - dist(z') K(z', z) |
inline double detailed_balance_gap(const ExactKernel& kernel, const std::vector<double>& dist) {
  double gap = 0.0;
  for (std::size_t i = 0; i < kernel.n; ++i) {
    for (std::size_t j = i + 1; j < kernel.n; ++j) {
      gap = std::max(gap, std::abs(dist[i] * kernel(i, j) - dist[j] * kernel(j, i)));
    }
  }
  return gap;
}

/// sum_{z, z'} dist(z) K(z, z') h(z) h(z')
inline double lag_one_autocov(const ExactKernel& kernel, const std::vector<double>& dist, const std::vector<double>& h) {
  double v = 0.0;
  for (std::size_t i = 0; i < kernel.n; ++i) {
    for (std::size_t j = 0; j < kernel.n; ++j) v += dist[i] * kernel(i, j) * h[i] * h[j];
  }
  return v;
}

/// Largest deviation of a row sum from one.
inline double row_sum_error(const ExactKernel& kernel) {
  double err = 0.0;
  for (std::size_t i = 0; i < kernel.n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kernel.n; ++j) s += kernel(i, j);
    err = std::max(err, std::abs(s - 1.0));
  }
  return err;
}

/// CSV dump with header `row,col,prob`; zero entries are skipped.
inline void write_kernel_csv(std::ostream& os, const ExactKernel& kernel) {
  const auto old_precision = os.precision(17);
  os << "row,col,prob\n";
  for (std::size_t i = 0; i < kernel.n; ++i) {
    for (std::size_t j = 0; j < kernel.n; ++j) {
      if (kernel(i, j) != 0.0) os << i << ',' << j << ',' << kernel(i, j) << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace pgibbs::oracle

#endif  // PGIBBS_ORACLE_HPP
