#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ergoperiod/random.hpp"
#include "ergoperiod/stats.hpp"

using namespace ergoperiod;

TEST(RunningStats, MatchesTwoPassFormulas) {
  const std::vector<double> xs{1.0, 4.0, 2.0, 8.0, 5.0, 7.0};
  stats::RunningStats s;
  for (double x : xs) s.add(x);
  double m = 0.0;
  for (double x : xs) m += x;
  m /= xs.size();
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= xs.size() - 1;
  EXPECT_DOUBLE_EQ(s.mean(), m);
  EXPECT_NEAR(s.variance(), v, 1e-12);
  EXPECT_NEAR(s.stderr_of_mean(), std::sqrt(v / xs.size()), 1e-12);
  EXPECT_NEAR(stats::variance(xs), v, 1e-12);
  EXPECT_DOUBLE_EQ(stats::mean(xs), m);
}

TEST(RunningStats, MergeEqualsSequential) {
  RandomStream rng(11, 0);
  stats::RunningStats all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal();
    all.add(x);
    (i < 377 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_EQ(left.count(), all.count());
  EXPECT_NEAR(left.mean(), all.mean(), 1e-13);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-12);
}

TEST(RunningStats, DegenerateCounts) {
  stats::RunningStats s;
  EXPECT_EQ(s.variance(), 0.0);
  s.add(3.0);
  EXPECT_EQ(s.variance(), 0.0);
}

TEST(ZScores, Conventions) {
  EXPECT_EQ(stats::two_sample_z(1.0, 0.0, 10, 1.0, 0.0, 10), 0.0);
  EXPECT_TRUE(std::isinf(stats::two_sample_z(1.0, 0.0, 10, 2.0, 0.0, 10)));
  EXPECT_EQ(stats::z_ratio(0.0, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(stats::z_ratio(0.1, 0.0)));
  EXPECT_NEAR(stats::z_ratio(0.2, 0.1), 2.0, 1e-15);
  // Equal proportions give z = 0; a clear gap gives a large z.
  EXPECT_EQ(stats::proportion_z(0.3, 100, 0.3, 100), 0.0);
  EXPECT_GT(std::abs(stats::proportion_z(0.1, 10000, 0.2, 10000)), 10.0);
}

TEST(ZScores, TwoSampleFormula) {
  const double z = stats::two_sample_z(1.0, 4.0, 100, 0.0, 9.0, 100);
  EXPECT_NEAR(z, 1.0 / std::sqrt(0.04 + 0.09), 1e-12);
}

TEST(BlockBootstrap, IidDataMatchesNaiveStderr) {
  RandomStream rng(12, 0);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = rng.normal();
  const double naive = std::sqrt(stats::variance(xs) / xs.size());
  const double boot = stats::block_bootstrap_stderr(xs, 1, 400, 5);
  EXPECT_NEAR(boot / naive, 1.0, 0.15);
}

TEST(BlockBootstrap, BlocksCaptureCorrelation) {
  // Each value repeated four times: the naive error is too small by 2x.
  RandomStream rng(13, 0);
  std::vector<double> xs;
  for (int i = 0; i < 5000; ++i) {
    const double v = rng.normal();
    for (int r = 0; r < 4; ++r) xs.push_back(v);
  }
  const double naive = std::sqrt(stats::variance(xs) / xs.size());
  const double boot = stats::block_bootstrap_stderr(xs, 16, 400, 6);
  EXPECT_GT(boot / naive, 1.6);
  EXPECT_LT(boot / naive, 2.4);
}

TEST(KolmogorovSmirnov, StatisticAndCritical) {
  EXPECT_EQ(stats::ks_statistic({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(stats::ks_statistic({0, 0, 0}, {1, 1, 1}), 1.0);
  EXPECT_NEAR(stats::ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5, 1e-15);
  // c(0.01) = sqrt(-ln(0.005)/2) = 1.6276
  EXPECT_NEAR(stats::ks_critical(100, 100, 0.01), 1.6276 * std::sqrt(200.0 / 10000.0), 1e-3);
}
