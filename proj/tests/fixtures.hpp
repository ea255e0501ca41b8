#ifndef PGIBBS_TESTS_FIXTURES_HPP
#define PGIBBS_TESTS_FIXTURES_HPP

#include <memory>
#include <vector>

#include "pgibbs/finite_hmm.hpp"
#include "pgibbs/poisson_ar1.hpp"

namespace pgibbs::test_util {

/// K=2, T=2 HMM with non-uniform tables; the default oracle substrate.
inline FiniteHmm toy_hmm() {
  return FiniteHmm({0.6, 0.4}, {{0.7, 0.3}, {0.2, 0.8}}, {{1.0, 2.5}, {0.5, 1.5}, {2.0, 0.8}});
}

/// K=3, T=1 HMM, for a second kernel shape.
inline FiniteHmm toy_hmm3() {
  return FiniteHmm({0.5, 0.3, 0.2}, {{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.25, 0.25, 0.5}},
                   {{1.0, 0.4, 2.0}, {0.7, 1.8, 1.1}});
}

/// Potentials bounded in [0.5, 2] over T = 4: used for the coupling checks.
inline FiniteHmm bounded_hmm(std::size_t horizon = 4) {
  FiniteHmm::Matrix g;
  for (std::size_t t = 0; t <= horizon; ++t) g.push_back(t % 2 == 0 ? std::vector<double>{2.0, 0.5} : std::vector<double>{0.7, 1.4});
  return FiniteHmm({0.5, 0.5}, {{0.8, 0.2}, {0.3, 0.7}}, g);
}

inline std::shared_ptr<const Dataset> small_dataset() {
  return std::make_shared<const Dataset>(Dataset{{1, 0, 3, 2, 1}});
}

}  // namespace pgibbs::test_util

#endif  // PGIBBS_TESTS_FIXTURES_HPP
