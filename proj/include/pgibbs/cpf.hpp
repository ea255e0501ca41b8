#ifndef PGIBBS_CPF_HPP
#define PGIBBS_CPF_HPP

// Conditional particle filter (Particle Gibbs) kernel.
//
// The reference trajectory always sits in slot 0 with ancestry (0, ..., 0).
// Any fixed choice gives the same kernel under cycle-invariant resampling, so
// no relabeling step is performed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/random.hpp"
#include "pgibbs/resampling.hpp"
#include "pgibbs/smc.hpp"

namespace pgibbs {

struct CpfConfig {
  std::size_t n_particles = 2;
  Scheme scheme = Scheme::multinomial;
  bool backward_sampling = false;
  bool forced_move = false;

  template <FeynmanKacModel M>
  void validate_for(const M&) const {
    if (n_particles < 2) throw ConfigError("cpf: need N >= 2 particles");
    if (backward_sampling && !HasTransitionDensity<M>) {
      throw ConfigError("cpf: backward sampling requires a model with a transition density");
    }
  }
};

template <typename State>
struct CpfOutput {
  Trajectory<State> new_trajectory;
  std::size_t selected_index = 0;
  AncestryTrace ancestry;
  bool moved = false;  // false => new_trajectory equals the input path
  std::optional<ParticleSystem<State>> system;
};

/// Forward pass: particle filter with slot 0 clamped to `frozen` at every time and
/// slots 1..N-1 drawn through the scheme's conditional resampler.
template <FeynmanKacModel M>
ParticleSystem<state_t<M>> cpf_forward(const M& model, const CpfConfig& config,
                                       const Trajectory<state_t<M>>& frozen, Rng& rng) {
  config.validate_for(model);
  const std::size_t horizon = model.horizon();
  if (frozen.size() != horizon + 1) {
    throw ConfigError("cpf_forward: frozen trajectory has length " + std::to_string(frozen.size()) + ", expected " +
                      std::to_string(horizon + 1));
  }
  const std::size_t n = config.n_particles;
  auto sys = detail::empty_system<state_t<M>>(horizon, n);
  sys.clouds[0][0] = frozen[0];
  for (std::size_t k = 1; k < n; ++k) sys.clouds[0][k] = model.sample_initial(rng);
  detail::record_potentials(model, sys, 0);
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto w = detail::weights_or_throw(sys, t);
    sys.genealogy[t] = conditional_resample(config.scheme, w, rng);
    sys.clouds[t + 1][0] = frozen[t + 1];
    for (std::size_t k = 1; k < n; ++k) {
      sys.clouds[t + 1][k] = model.sample_transition(t + 1, sys.clouds[t][sys.genealogy[t][k]], rng);
    }
    detail::record_potentials(model, sys, t + 1);
  }
  detail::weights_or_throw(sys, horizon);
  return sys;
}

/// Picks the output index at the final time. Without forced move this is
/// a draw from w. With forced move, n >= 1 is proposed with probability
/// w^n / (1 - w^0) and accepted with probability min(1, (1 - w^0) / (1 - w^n)),
/// otherwise the frozen slot 0 is kept.
inline std::size_t select_index(const WeightVector& w, bool forced_move, Rng& rng) {
  if (!forced_move) return sample_categorical(w.values(), rng);
  const std::size_t n = w.size();
  double others = 0.0;
  for (std::size_t k = 1; k < n; ++k) others += w[k];
  if (!(others > 0.0)) return 0;
  std::vector<double> proposal(w.values().begin(), w.values().end());
  proposal[0] = 0.0;
  const std::size_t candidate = sample_categorical(proposal, rng);
  const double log_ratio = std::log(others) - std::log1p(-w[candidate]);
  if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) return candidate;
  return 0;
}

/// Backward sampling: redraws the ancestor of the selected path at each t = T-1..0 from
/// R_t(A^b = m | A^{-b}) m_{t+1}(x_t^m, x_{t+1}^b), writing each draw back into
/// the genealogy.
template <HasTransitionDensity M>
AncestryTrace backward_sample(ParticleSystem<state_t<M>>& sys, const M& model, Scheme scheme, std::size_t n_star,
                              Rng& rng) {
  const std::size_t horizon = sys.horizon();
  const std::size_t n = sys.size();
  if (n_star >= n) throw ConfigError("backward_sample: selected index out of range");
  AncestryTrace b(horizon + 1);
  b[horizon] = n_star;
  std::vector<double> log_mass(n);
  std::vector<double> mass(n);
  for (std::size_t t = horizon; t-- > 0;) {
    const std::size_t child = b[t + 1];
    const auto w = detail::weights_or_throw(sys, t);
    const auto prior = scheme == Scheme::multinomial
                           ? std::vector<double>(w.values().begin(), w.values().end())
                           : ancestor_conditional_distribution(scheme, w, sys.genealogy[t], child);
    const auto& target = sys.clouds[t + 1][child];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < n; ++m) {
      log_mass[m] = prior[m] > 0.0
                        ? std::log(prior[m]) + model.transition_log_density(t + 1, sys.clouds[t][m], target)
                        : -std::numeric_limits<double>::infinity();
      top = std::max(top, log_mass[m]);
    }
    if (!std::isfinite(top)) {
      throw NumericalError("backward_sample: zero total mass at t = " + std::to_string(t));
    }
    for (std::size_t m = 0; m < n; ++m) mass[m] = std::exp(log_mass[m] - top);
    b[t] = sample_categorical(mass, rng);
    sys.genealogy[t][child] = b[t];
  }
  return b;
}

/// One Particle Gibbs update of `current`: forward pass, index selection and, when configured, backward sampling.
template <FeynmanKacModel M>
CpfOutput<state_t<M>> cpf_step(const M& model, const CpfConfig& config, const Trajectory<state_t<M>>& current,
                               Rng& rng) {
  auto sys = cpf_forward(model, config, current, rng);
  CpfOutput<state_t<M>> out;
  out.selected_index = select_index(detail::weights_or_throw(sys, sys.horizon()), config.forced_move, rng);
  if (config.backward_sampling) {
    if constexpr (HasTransitionDensity<M>) {
      out.ancestry = backward_sample(sys, model, config.scheme, out.selected_index, rng);
    }
  } else {
    out.ancestry = trace_ancestry(sys, out.selected_index);
  }
  out.moved = false;
  for (std::size_t b : out.ancestry) out.moved = out.moved || b != 0;
  out.new_trajectory = out.moved ? extract_trajectory(sys, out.ancestry) : current;
  out.system = std::move(sys);
  return out;
}

/// Applies cpf_step `iterations` times from `init`, handing every post-burn-in
/// output to `sink(iteration, output)`.
template <FeynmanKacModel M, typename Sink>
void run_chain(const M& model, const CpfConfig& config, std::size_t iterations, std::size_t burn_in,
               Trajectory<state_t<M>> init, Rng& rng, Sink&& sink) {
  if (iterations <= burn_in) throw ConfigError("run_chain: iterations must exceed burn_in");
  Trajectory<state_t<M>> state = std::move(init);
  for (std::size_t it = 0; it < iterations; ++it) {
    auto out = cpf_step(model, config, state, rng);
    state = out.new_trajectory;
    if (it >= burn_in) sink(it, out);
  }
}

}  // namespace pgibbs

#endif  // PGIBBS_CPF_HPP
