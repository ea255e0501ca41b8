#ifndef PGIBBS_SMC_HPP
#define PGIBBS_SMC_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/random.hpp"
#include "pgibbs/resampling.hpp"

namespace pgibbs {

/// Output of a forward particle run: every cloud, the full genealogy and the
/// per-time log potentials. Nothing is pruned.
template <typename State>
struct ParticleSystem {
  std::vector<std::vector<State>> clouds;         // (T+1) x N
  std::vector<AncestorVector> genealogy;          // T x N; genealogy[t][n] is the time-t parent of particle n at t+1
  std::vector<std::vector<double>> log_potentials;  // (T+1) x N
  double log_normalizer_estimate = 0.0;

  std::size_t horizon() const { return genealogy.size(); }
  std::size_t size() const { return clouds.empty() ? 0 : clouds.front().size(); }

  WeightVector weights(std::size_t t) const { return normalize_weights(log_potentials[t]); }
};

/// b_{0:T}: time-t index of the ancestor of a chosen final particle.
using AncestryTrace = std::vector<std::size_t>;

namespace detail {

template <typename State>
WeightVector weights_or_throw(const ParticleSystem<State>& sys, std::size_t t) {
  try {
    return sys.weights(t);
  } catch (const NumericalError&) {
    throw NumericalError("degenerate weights at t = " + std::to_string(t) + ": every potential underflows");
  }
}

template <FeynmanKacModel M>
void record_potentials(const M& model, ParticleSystem<state_t<M>>& sys, std::size_t t) {
  auto& lp = sys.log_potentials[t];
  const auto& cloud = sys.clouds[t];
  lp.resize(cloud.size());
  for (std::size_t n = 0; n < cloud.size(); ++n) lp[n] = model.log_potential(t, cloud[n]);
  sys.log_normalizer_estimate += log_mean_exp(lp);
}

template <typename State>
ParticleSystem<State> empty_system(std::size_t horizon, std::size_t n) {
  ParticleSystem<State> sys;
  sys.clouds.assign(horizon + 1, std::vector<State>(n));
  sys.genealogy.assign(horizon, AncestorVector(n, 0));
  sys.log_potentials.assign(horizon + 1, std::vector<double>(n, 0.0));
  return sys;
}

}  // namespace detail

/// Unconditional particle filter resampling at every step. Particles are
/// propagated in slot order, so a seed fixes the whole run.
/// log_normalizer_estimate = sum_t log((1/N) sum_n G_t(X_t^n)), an unbiased
/// estimate of Z_T on the natural scale.
template <FeynmanKacModel M>
ParticleSystem<state_t<M>> forward_smc(const M& model, std::size_t n_particles, Scheme scheme, Rng& rng) {
  if (n_particles < 1) throw ConfigError("forward_smc: need at least one particle");
  const std::size_t horizon = model.horizon();
  auto sys = detail::empty_system<state_t<M>>(horizon, n_particles);
  for (auto& x : sys.clouds[0]) x = model.sample_initial(rng);
  detail::record_potentials(model, sys, 0);
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto w = detail::weights_or_throw(sys, t);
    sys.genealogy[t] = resample(scheme, w, rng);
    for (std::size_t n = 0; n < n_particles; ++n) {
      sys.clouds[t + 1][n] = model.sample_transition(t + 1, sys.clouds[t][sys.genealogy[t][n]], rng);
    }
    detail::record_potentials(model, sys, t + 1);
  }
  detail::weights_or_throw(sys, horizon);
  return sys;
}

/// Follows the genealogy back from final particle n: b_T = n, b_t = A_t^{b_{t+1}}.
template <typename State>
AncestryTrace trace_ancestry(const ParticleSystem<State>& sys, std::size_t n) {
  if (n >= sys.size()) {
    throw ConfigError("trace_ancestry: label " + std::to_string(n) + " out of range for " +
                      std::to_string(sys.size()) + " particles");
  }
  const std::size_t horizon = sys.horizon();
  AncestryTrace b(horizon + 1);
  b[horizon] = n;
  for (std::size_t t = horizon; t-- > 0;) b[t] = sys.genealogy[t][b[t + 1]];
  return b;
}

template <typename State>
Trajectory<State> extract_trajectory(const ParticleSystem<State>& sys, const AncestryTrace& trace) {
  Trajectory<State> path(trace.size());
  for (std::size_t t = 0; t < trace.size(); ++t) path[t] = sys.clouds[t][trace[t]];
  return path;
}

}  // namespace pgibbs

#endif  // PGIBBS_SMC_HPP
