#ifndef PGIBBS_MODEL_HPP
#define PGIBBS_MODEL_HPP

#include <concepts>
#include <cstddef>
#include <vector>

#include "pgibbs/random.hpp"

namespace pgibbs {

/// A path x_{0:T}; always holds horizon() + 1 states.
template <typename State>
using Trajectory = std::vector<State>;

/// Feynman-Kac model: a Markov chain (initial law, transitions) reweighted by
/// strictly positive potentials G_t, all handled in log space.
///
/// Time arguments are 0-based. `sample_transition(t, x, rng)` and
/// `transition_log_density(t, x, y)` describe the move from time t-1 to t,
/// so t ranges over 1..horizon().
///
/// Models are immutable after construction; every behavior is const and may be
/// called from several workers at once as long as each brings its own Rng.
template <typename M>
concept FeynmanKacModel = requires(const M& m, Rng& rng, std::size_t t, const typename M::state_type& x) {
  typename M::state_type;
  { m.horizon() } -> std::convertible_to<std::size_t>;
  { m.sample_initial(rng) } -> std::convertible_to<typename M::state_type>;
  { m.sample_transition(t, x, rng) } -> std::convertible_to<typename M::state_type>;
  { m.log_potential(t, x) } -> std::convertible_to<double>;
};

/// Models whose transition kernel has a tractable density (required by backward sampling).
template <typename M>
concept HasTransitionDensity =
    FeynmanKacModel<M> && requires(const M& m, std::size_t t, const typename M::state_type& x) {
      { m.transition_log_density(t, x, x) } -> std::convertible_to<double>;
    };

/// Models over the labels 0..num_states()-1 that the exact oracle can enumerate.
template <typename M>
concept FiniteModel = HasTransitionDensity<M> && std::same_as<typename M::state_type, std::size_t> &&
                      requires(const M& m, std::size_t k) {
                        { m.num_states() } -> std::convertible_to<std::size_t>;
                        { m.initial_log_density(k) } -> std::convertible_to<double>;
                      };

template <typename M>
using state_t = typename M::state_type;

}  // namespace pgibbs

#endif  // PGIBBS_MODEL_HPP
