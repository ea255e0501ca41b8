#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "pgibbs/oracle.hpp"

using namespace pgibbs;
using namespace pgibbs::oracle;

namespace {

FiniteHmm random_hmm(Rng& rng, std::size_t k, std::size_t horizon) {
  auto row = [&] {
    std::vector<double> r(k);
    double s = 0.0;
    for (auto& v : r) s += (v = uniform(rng, 0.05, 1.0));
    for (auto& v : r) v /= s;
    return r;
  };
  FiniteHmm::Matrix p, g;
  for (std::size_t i = 0; i < k; ++i) p.push_back(row());
  for (std::size_t t = 0; t <= horizon; ++t) {
    std::vector<double> gt(k);
    for (auto& v : gt) v = uniform(rng, 0.1, 3.0);
    g.push_back(gt);
  }
  return FiniteHmm(row(), p, g);
}

TEST(PathIndex, RoundTripAndOrder) {
  for (std::size_t i = 0; i < 27; ++i) EXPECT_EQ(path_index(3, path_from_index(3, 2, i)), i);
  EXPECT_EQ(path_from_index(2, 2, 1), (Trajectory<std::size_t>{0, 0, 1}));
  EXPECT_EQ(path_from_index(2, 2, 4), (Trajectory<std::size_t>{1, 0, 0}));
}

TEST(BruteForceQ, UnitPotentialsGivePriorLaw) {
  const auto m = finite_hmm(2, {0.3, 0.7}, {{0.6, 0.4}, {0.1, 0.9}}, {1.0, 1.0});
  const auto q = brute_force_q(m);
  EXPECT_NEAR(q.normalizer, 1.0, 1e-14);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto x = q.path(i);
    EXPECT_NEAR(q.probs[i], m.initial()[x[0]] * m.transition()[x[0]][x[1]] * m.transition()[x[1]][x[2]], 1e-15);
  }
}

TEST(BruteForceQ, SingleState) {
  const FiniteHmm m({1.0}, {{1.0}}, {{0.5}, {0.5}});
  const auto q = brute_force_q(m);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q.probs[0], 1.0);
}

TEST(BruteForceQ, MatchesForwardRecursion) {
  auto rng = make_stream(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_hmm(rng, 2 + trial % 3, 2 + trial % 2);
    const auto q = brute_force_q(m);
    EXPECT_NEAR(q.normalizer / forward_normalizer(m), 1.0, 1e-12);
    double total = 0.0;
    for (double p : q.probs) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(BruteForceQ, SizeCap) {
  const auto m = finite_hmm(20, {0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, {1.0, 1.0});
  EXPECT_THROW(brute_force_q(m), ConfigError);
}

TEST(ExactLawCap, RejectsLargeN) {
  std::vector<double> w(6, 1.0 / 6.0);
  EXPECT_THROW(exact_resampling_law(Scheme::multinomial, WeightVector(w)), ConfigError);
}

TEST(ExactKernel, RowSumsUnitPotentials) {
  const auto m = finite_hmm(1, {0.5, 0.5}, {{0.3, 0.7}, {0.6, 0.4}}, {1.0, 1.0});
  const auto k = exact_cpf_kernel(m, CpfConfig{2});
  EXPECT_LT(row_sum_error(k), 1e-12);
}

TEST(ExactKernel, EnumerationCap) {
  const auto m = test_util::toy_hmm();
  EXPECT_THROW(exact_cpf_kernel(m, CpfConfig{3}, 100), ConfigError);
}

class KernelProperties : public ::testing::TestWithParam<std::tuple<Scheme, std::size_t>> {};

TEST_P(KernelProperties, InvariantAndReversible) {
  const auto [scheme, n] = GetParam();
  for (const auto& m : {test_util::toy_hmm(), test_util::toy_hmm3()}) {
    const auto q = brute_force_q(m);
    for (bool bs : {false, true}) {
      for (bool fm : {false, true}) {
        const auto k = exact_cpf_kernel(m, CpfConfig{n, scheme, bs, fm});
        EXPECT_LT(row_sum_error(k), 1e-10);
        EXPECT_LT(stationarity_gap(k, q.probs), 1e-12) << "bs=" << bs << " fm=" << fm;
        if (scheme == Scheme::multinomial) {
          EXPECT_LT(detailed_balance_gap(k, q.probs), 1e-12);
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Schemes, KernelProperties,
                         ::testing::Combine(::testing::Values(Scheme::multinomial, Scheme::residual,
                                                              Scheme::systematic),
                                            ::testing::Values(std::size_t{2}, std::size_t{3})));

TEST(KernelOrderings, ForcedMoveDominatesOffDiagonal) {
  const auto m = test_util::toy_hmm();
  for (std::size_t n : {std::size_t{2}, std::size_t{3}}) {
    const auto plain = exact_cpf_kernel(m, CpfConfig{n});
    const auto forced = exact_cpf_kernel(m, CpfConfig{n, Scheme::multinomial, false, true});
    for (std::size_t i = 0; i < plain.n; ++i)
      for (std::size_t j = 0; j < plain.n; ++j)
        if (i != j) {
          EXPECT_GE(forced(i, j), plain(i, j) - 1e-12);
        }
  }
}

TEST(KernelOrderings, BackwardSamplingLowersLagOne) {
  const auto m = test_util::toy_hmm();
  const auto q = brute_force_q(m);
  auto rng = make_stream(2);
  for (std::size_t n : {std::size_t{2}, std::size_t{3}}) {
    const auto plain = exact_cpf_kernel(m, CpfConfig{n});
    const auto bs = exact_cpf_kernel(m, CpfConfig{n, Scheme::multinomial, true, false});
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> h(q.size());
      for (auto& v : h) v = uniform(rng, -1.0, 1.0);
      EXPECT_LE(lag_one_autocov(bs, q.probs, h), lag_one_autocov(plain, q.probs, h) + 1e-12);
    }
  }
}

TEST(Metrics, StationarityGap) {
  const std::vector<double> dist{0.2, 0.3, 0.5};
  EXPECT_EQ(stationarity_gap(ExactKernel::identity(3), dist), 0.0);
  ExactKernel k(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) k(i, j) = dist[j];
  EXPECT_LT(stationarity_gap(k, dist), 1e-15);
  k(0, 0) += 1e-3;
  for (std::size_t j = 0; j < 3; ++j) k(0, j) /= 1.001;
  EXPECT_GT(stationarity_gap(k, dist), 1e-4);
}

TEST(Metrics, DetailedBalanceGap) {
  ExactKernel sym(2);
  sym(0, 0) = 0.3, sym(0, 1) = 0.7, sym(1, 0) = 0.7, sym(1, 1) = 0.3;
  EXPECT_EQ(detailed_balance_gap(sym, {0.5, 0.5}), 0.0);
  ExactKernel asym(2);
  asym(0, 0) = 0.9, asym(0, 1) = 0.1, asym(1, 0) = 0.6, asym(1, 1) = 0.4;
  EXPECT_GT(detailed_balance_gap(asym, {0.5, 0.5}), 0.2);
}

TEST(Metrics, LagOneAutocov) {
  const std::vector<double> dist{0.2, 0.3, 0.5};
  const std::vector<double> h{1.0, -2.0, 0.5};
  double sq = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    sq += dist[i] * h[i] * h[i];
    mean += dist[i] * h[i];
  }
  EXPECT_NEAR(lag_one_autocov(ExactKernel::identity(3), dist, h), sq, 1e-15);
  ExactKernel k(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) k(i, j) = dist[j];
  EXPECT_NEAR(lag_one_autocov(k, dist, h), mean * mean, 1e-15);
}

TEST(KernelCsv, HeaderAndRows) {
  ExactKernel k(2);
  k(0, 0) = 0.25, k(0, 1) = 0.75, k(1, 1) = 1.0;
  std::ostringstream os;
  write_kernel_csv(os, k);
  EXPECT_EQ(os.str(), "row,col,prob\n0,0,0.25\n0,1,0.75\n1,1,1\n");
}

}  // namespace
