#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "pgibbs/finite_hmm.hpp"
#include "pgibbs/oracle.hpp"
#include "pgibbs/smc.hpp"
#include "stats.hpp"

using namespace pgibbs;

namespace {

// Every particle carries its creation index so that extracted paths can be checked.
struct TaggedModel {
  using state_type = std::pair<std::size_t, std::size_t>;  // (time, serial)
  std::size_t T;
  mutable std::size_t serial = 0;
  std::size_t horizon() const { return T; }
  state_type sample_initial(Rng&) const { return {0, serial++}; }
  state_type sample_transition(std::size_t t, const state_type&, Rng&) const { return {t, serial++}; }
  double log_potential(std::size_t, const state_type& x) const { return std::log(1.0 + static_cast<double>(x.second % 3)); }
};

TEST(ForwardSmc, UnitPotentialsGiveZeroEstimate) {
  const auto m = finite_hmm(4, {0.3, 0.7}, {{0.5, 0.5}, {0.1, 0.9}}, {1.0, 1.0});
  auto rng = make_stream(1);
  for (auto scheme : {Scheme::multinomial, Scheme::residual, Scheme::systematic}) {
    const auto sys = forward_smc(m, 5, scheme, rng);
    EXPECT_EQ(sys.log_normalizer_estimate, 0.0);
    EXPECT_EQ(sys.horizon(), 4u);
    EXPECT_EQ(sys.size(), 5u);
  }
}

TEST(ForwardSmc, SingleParticle) {
  const auto m = test_util::toy_hmm();
  auto rng = make_stream(2);
  const auto sys = forward_smc(m, 1, Scheme::multinomial, rng);
  double expected = 0.0;
  for (std::size_t t = 0; t <= 2; ++t) {
    expected += m.log_potential(t, sys.clouds[t][0]);
    if (t < 2) {
      EXPECT_EQ(sys.genealogy[t][0], 0u);
    }
  }
  EXPECT_NEAR(sys.log_normalizer_estimate, expected, 1e-14);
}

TEST(ForwardSmc, EstimatorDefinition) {
  const auto m = test_util::toy_hmm();
  auto rng = make_stream(3);
  const auto sys = forward_smc(m, 4, Scheme::systematic, rng);
  double expected = 0.0;
  for (std::size_t t = 0; t <= 2; ++t) {
    double s = 0.0;
    for (auto x : sys.clouds[t]) s += m.potential(t, x);
    expected += std::log(s / 4.0);
  }
  EXPECT_NEAR(sys.log_normalizer_estimate, expected, 1e-13);
}

TEST(ForwardSmc, RejectsZeroParticles) {
  auto rng = make_stream(4);
  EXPECT_THROW(forward_smc(test_util::toy_hmm(), 0, Scheme::multinomial, rng), ConfigError);
}

struct UnderflowModel {
  using state_type = double;
  std::size_t horizon() const { return 3; }
  double sample_initial(Rng&) const { return 0.0; }
  double sample_transition(std::size_t, double, Rng&) const { return 0.0; }
  double log_potential(std::size_t t, double) const {
    return t == 2 ? -std::numeric_limits<double>::infinity() : 0.0;
  }
};

TEST(ForwardSmc, DegenerateWeightsNameTheTime) {
  auto rng = make_stream(5);
  try {
    forward_smc(UnderflowModel{}, 3, Scheme::multinomial, rng);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("t = 2"), std::string::npos) << e.what();
  }
}

TEST(ForwardSmc, SeedDeterminism) {
  const auto m = test_util::toy_hmm3();
  auto r1 = make_stream(77);
  auto r2 = make_stream(77);
  const auto a = forward_smc(m, 6, Scheme::residual, r1);
  const auto b = forward_smc(m, 6, Scheme::residual, r2);
  EXPECT_EQ(a.clouds, b.clouds);
  EXPECT_EQ(a.genealogy, b.genealogy);
  EXPECT_EQ(a.log_normalizer_estimate, b.log_normalizer_estimate);
}

class Unbiased : public ::testing::TestWithParam<std::tuple<Scheme, std::size_t>> {};

TEST_P(Unbiased, MeanOfEstimateMatchesPathSum) {
  const auto [scheme, n] = GetParam();
  const auto m = test_util::toy_hmm();
  const double z = oracle::brute_force_q(m).normalizer;
  auto rng = make_stream(100 + n);
  test_util::Moments mom;
  for (int r = 0; r < 100000; ++r) mom.add(std::exp(forward_smc(m, n, scheme, rng).log_normalizer_estimate));
  EXPECT_LT(std::abs(mom.mean() - z), 3.0 * mom.standard_error()) << "mean " << mom.mean() << " vs " << z;
}

INSTANTIATE_TEST_SUITE_P(Schemes, Unbiased,
                         ::testing::Combine(::testing::Values(Scheme::multinomial, Scheme::residual,
                                                              Scheme::systematic),
                                            ::testing::Values(std::size_t{2}, std::size_t{5})));

TEST(TraceAncestry, FixedGenealogies) {
  auto sys = detail::empty_system<int>(3, 4);
  EXPECT_EQ(trace_ancestry(sys, 2), (AncestryTrace{0, 0, 0, 2}));
  for (auto& g : sys.genealogy) g = {0, 1, 2, 3};
  EXPECT_EQ(trace_ancestry(sys, 2), (AncestryTrace{2, 2, 2, 2}));
  EXPECT_THROW(trace_ancestry(sys, 4), ConfigError);
}

TEST(TraceAncestry, RandomGenealogyMatchesNaiveLoop) {
  auto rng = make_stream(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto sys = detail::empty_system<int>(3, 3);
    for (auto& g : sys.genealogy)
      for (auto& v : g) v = uniform_index(rng, 3);
    for (std::size_t n = 0; n < 3; ++n) {
      const auto b = trace_ancestry(sys, n);
      std::size_t cur = n;
      EXPECT_EQ(b[3], n);
      for (int t = 2; t >= 0; --t) {
        cur = sys.genealogy[t][cur];
        EXPECT_EQ(b[t], cur);
      }
    }
  }
}

TEST(ExtractTrajectory, ReproducesGeneratedStates) {
  auto rng = make_stream(7);
  TaggedModel m{4};
  const auto sys = forward_smc(m, 5, Scheme::multinomial, rng);
  std::set<std::pair<std::size_t, std::size_t>> created;
  for (const auto& cloud : sys.clouds)
    for (const auto& x : cloud) created.insert(x);
  for (std::size_t n = 0; n < 5; ++n) {
    const auto trace = trace_ancestry(sys, n);
    const auto path = extract_trajectory(sys, trace);
    for (std::size_t t = 0; t < path.size(); ++t) {
      EXPECT_EQ(path[t], sys.clouds[t][trace[t]]);
      EXPECT_EQ(path[t].first, t);
      EXPECT_TRUE(created.count(path[t]));
    }
  }
}

TEST(ExtractTrajectory, SingleParticleAndFirstSlot) {
  auto rng = make_stream(8);
  const auto m = test_util::toy_hmm();
  const auto sys = forward_smc(m, 1, Scheme::multinomial, rng);
  const auto path = extract_trajectory(sys, trace_ancestry(sys, 0));
  for (std::size_t t = 0; t <= 2; ++t) EXPECT_EQ(path[t], sys.clouds[t][0]);
}

}  // namespace
