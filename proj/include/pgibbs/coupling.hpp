#ifndef PGIBBS_COUPLING_HPP
#define PGIBBS_COUPLING_HPP

// Coupled pair of multinomial CPF kernels started from two reference paths.
// Each side is marginally a plain multinomial CPF kernel; particles whose
// ancestors were drawn jointly from the coupled set are propagated once and
// shared by both systems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "pgibbs/cpf.hpp"
#include "pgibbs/error.hpp"
#include "pgibbs/model.hpp"
#include "pgibbs/random.hpp"
#include "pgibbs/smc.hpp"

namespace pgibbs {

struct CouplingReport {
  bool coupled_final = false;             // the two output paths are equal
  std::vector<std::size_t> coupled_sizes;  // |C_t| for t = 0..T
  std::vector<double> lambda;             // lambda_t, t = 0..T
  std::vector<double> lambda_check;
};

template <typename State>
struct CoupledOutput {
  Trajectory<State> first;
  Trajectory<State> second;
  CouplingReport report;
};

namespace detail {

// Potential masses of a cloud split by membership of the coupled set, with a
// common max over the whole cloud.
struct SplitMass {
  std::vector<double> linear;  // exp(logG - max) per slot
  double coupled = 0.0;
  double free = 0.0;
};

inline SplitMass split_mass(const std::vector<double>& log_g, const std::vector<bool>& in_coupled, std::size_t t) {
  SplitMass s;
  const double top = *std::max_element(log_g.begin(), log_g.end());
  if (!std::isfinite(top)) throw NumericalError("coupled_cpf_step: degenerate weights at t = " + std::to_string(t));
  s.linear.resize(log_g.size());
  for (std::size_t n = 0; n < log_g.size(); ++n) {
    s.linear[n] = std::exp(log_g[n] - top);
    (in_coupled[n] ? s.coupled : s.free) += s.linear[n];
  }
  return s;
}

inline std::size_t draw_from_subset(const SplitMass& s, const std::vector<bool>& in_coupled, bool want_coupled,
                                    Rng& rng) {
  std::vector<double> mass(s.linear.size(), 0.0);
  for (std::size_t n = 0; n < mass.size(); ++n) {
    if (in_coupled[n] == want_coupled) mass[n] = s.linear[n];
  }
  return sample_categorical(mass, rng);
}

// Ancestor pair for one free slot given lambda, lambda_check: with probability
// min(lambda, lambda_check) both come jointly from C (flag true); otherwise they
// are drawn from the residual kappa mixture.
struct AncestorPair {
  std::size_t first;
  std::size_t second;
  bool coupled;
};

inline AncestorPair coupled_ancestors(const SplitMass& s1, const SplitMass& s2, const std::vector<bool>& in_coupled,
                                      Rng& rng) {
  const double lam1 = s1.coupled / (s1.coupled + s1.free);
  const double lam2 = s2.coupled / (s2.coupled + s2.free);
  const double omega = std::min(lam1, lam2);
  const double u = uniform01(rng);
  if (u < omega) {
    const std::size_t a = draw_from_subset(s1, in_coupled, true, rng);
    return {a, a, true};
  }
  const double rest = 1.0 - omega;
  const double gap = std::abs(lam1 - lam2);
  const bool split = rest > 0.0 && uniform01(rng) * rest < gap;
  // With lam1 <= lam2 a split sends side 1 to C^c and side 2 to C; mirrored otherwise.
  const bool first_from_coupled = split && lam1 > lam2;
  const bool second_from_coupled = split && lam2 >= lam1;
  return {draw_from_subset(s1, in_coupled, first_from_coupled, rng), draw_from_subset(s2, in_coupled, second_from_coupled, rng),
          false};
}

}  // namespace detail

/// One coupled draw (Z*, Zcheck*) from P(z, .) x P(z_check, .) under multinomial resampling.
template <FeynmanKacModel M>
CoupledOutput<state_t<M>> coupled_cpf_step(const M& model, std::size_t n_particles, const Trajectory<state_t<M>>& z,
                                           const Trajectory<state_t<M>>& z_check, Rng& rng) {
  using State = state_t<M>;
  if (n_particles < 2) throw ConfigError("coupled_cpf_step: need N >= 2 particles");
  const std::size_t horizon = model.horizon();
  if (z.size() != horizon + 1 || z_check.size() != horizon + 1) {
    throw ConfigError("coupled_cpf_step: reference paths must have length T + 1");
  }
  const std::size_t n = n_particles;
  auto sys1 = detail::empty_system<State>(horizon, n);
  auto sys2 = detail::empty_system<State>(horizon, n);
  std::vector<bool> in_coupled(n, true);
  in_coupled[0] = false;
  CouplingReport report;

  sys1.clouds[0][0] = z[0];
  sys2.clouds[0][0] = z_check[0];
  for (std::size_t k = 1; k < n; ++k) {
    sys1.clouds[0][k] = model.sample_initial(rng);
    sys2.clouds[0][k] = sys1.clouds[0][k];
  }

  auto potentials = [&](std::size_t t) {
    for (std::size_t k = 0; k < n; ++k) {
      sys1.log_potentials[t][k] = model.log_potential(t, sys1.clouds[t][k]);
      sys2.log_potentials[t][k] = model.log_potential(t, sys2.clouds[t][k]);
    }
    report.coupled_sizes.push_back(static_cast<std::size_t>(std::count(in_coupled.begin(), in_coupled.end(), true)));
    const auto s1 = detail::split_mass(sys1.log_potentials[t], in_coupled, t);
    const auto s2 = detail::split_mass(sys2.log_potentials[t], in_coupled, t);
    report.lambda.push_back(s1.coupled / (s1.coupled + s1.free));
    report.lambda_check.push_back(s2.coupled / (s2.coupled + s2.free));
    return std::make_pair(s1, s2);
  };

  for (std::size_t t = 0; t < horizon; ++t) {
    const auto [s1, s2] = potentials(t);
    std::vector<bool> next_coupled(n, false);
    sys1.genealogy[t][0] = 0;
    sys2.genealogy[t][0] = 0;
    sys1.clouds[t + 1][0] = z[t + 1];
    sys2.clouds[t + 1][0] = z_check[t + 1];
    for (std::size_t k = 1; k < n; ++k) {
      const auto pair = detail::coupled_ancestors(s1, s2, in_coupled, rng);
      sys1.genealogy[t][k] = pair.first;
      sys2.genealogy[t][k] = pair.second;
      sys1.clouds[t + 1][k] = model.sample_transition(t + 1, sys1.clouds[t][pair.first], rng);
      if (pair.coupled) {
        sys2.clouds[t + 1][k] = sys1.clouds[t + 1][k];
        next_coupled[k] = true;
      } else {
        sys2.clouds[t + 1][k] = model.sample_transition(t + 1, sys2.clouds[t][pair.second], rng);
      }
    }
    in_coupled = std::move(next_coupled);
  }

  const auto [s1, s2] = potentials(horizon);
  const auto pick = detail::coupled_ancestors(s1, s2, in_coupled, rng);
  CoupledOutput<State> out;
  out.first = extract_trajectory(sys1, trace_ancestry(sys1, pick.first));
  out.second = extract_trajectory(sys2, trace_ancestry(sys2, pick.second));
  report.coupled_final = out.first == out.second;
  out.report = std::move(report);
  return out;
}

struct CouplingEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::size_t reps = 0;
};

/// Fraction of coupled draws with equal outputs, with its binomial standard error.
template <FeynmanKacModel M>
CouplingEstimate estimate_coupling_probability(const M& model, std::size_t n_particles,
                                               const Trajectory<state_t<M>>& z,
                                               const Trajectory<state_t<M>>& z_check, std::size_t reps, Rng& rng) {
  if (reps < 1) throw ConfigError("estimate_coupling_probability: reps must be >= 1");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    if (coupled_cpf_step(model, n_particles, z, z_check, rng).report.coupled_final) ++hits;
  }
  CouplingEstimate est;
  est.reps = reps;
  est.fraction = static_cast<double>(hits) / static_cast<double>(reps);
  est.standard_error = std::sqrt(est.fraction * (1.0 - est.fraction) / static_cast<double>(reps));
  return est;
}

}  // namespace pgibbs

#endif  // PGIBBS_COUPLING_HPP
