#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ergoperiod/error.hpp"
#include "ergoperiod/sublinear.hpp"
#include "oracles.hpp"

using namespace ergoperiod;
using namespace ergoperiod::sublinear;
using markov::DiscretePeriodicMeasure;
using markov::StochasticMatrix;

namespace {

StochasticMatrix flip() { return StochasticMatrix::from_rows({{0, 1}, {1, 0}}); }

UpperExpectation flip_family() {
  return UpperExpectation::from_periodic(DiscretePeriodicMeasure::from_initial(flip(), 2, {1, 0}));
}

std::vector<double> random_phi(RandomStream& rng, std::size_t n) {
  std::vector<double> phi(n);
  for (auto& v : phi) v = 4.0 * rng.uniform() - 2.0;
  return phi;
}

}  // namespace

TEST(UpperExpect, FlipFamilyMaxOfDotProducts) {
  const auto ue = flip_family();
  EXPECT_EQ(upper_expect(ue, std::vector<double>{0.2, 0.9}), 0.9);
  EXPECT_EQ(upper_expect_argmax(ue, std::vector<double>{0.2, 0.9}), 1u);
  EXPECT_EQ(upper_expect(ue, std::vector<double>{3.5, 3.5}), 3.5);
}

TEST(Capacity, FlipFamily) {
  const auto ue = flip_family();
  EXPECT_EQ(capacity(ue, 0b00), 0.0);
  EXPECT_EQ(capacity(ue, 0b11), 1.0);
  EXPECT_EQ(capacity(ue, 0b01), 1.0);
}

TEST(Capacity, IntervalsNeedEdges) {
  measures::PeriodicMeasureFamily fam;
  fam.tau = 1.0;
  fam.s_grid = {0.0};
  fam.kind = measures::FamilyKind::ExactVector;
  fam.measures = {measures::EmpiricalMeasure::exact(measures::Partition::circle(4), {.1, .2, .3, .4})};
  const auto ue = UpperExpectation::from_family(fam);
  EXPECT_NEAR(capacity(ue, 0.25, 0.75), 0.5, 1e-15);
  try {
    capacity(ue, 0.3, 0.75);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SetNotRepresentable);
  }
  EXPECT_THROW(capacity(flip_family(), 0.0, 1.0), Error);
}

TEST(UpperExpect, SublinearExpectationAxioms) {
  RandomStream rng(41, 0);
  for (const auto& e : oracle::ps_corpus(40, 42)) {
    const auto ue = UpperExpectation::from_periodic(e.pm);
    const std::size_t n = e.p.size();
    for (int trial = 0; trial < 25; ++trial) {
      const auto x = random_phi(rng, n), y = random_phi(rng, n);
      std::vector<double> sum(n), bigger(n), scaled(n), shifted(n);
      const double lambda = 3.0 * rng.uniform(), c = rng.uniform() - 0.5;
      for (std::size_t i = 0; i < n; ++i) {
        sum[i] = x[i] + y[i];
        bigger[i] = x[i] + rng.uniform();
        scaled[i] = lambda * x[i];
        shifted[i] = x[i] + c;
      }
      const double ex = upper_expect(ue, x);
      EXPECT_LE(upper_expect(ue, sum), ex + upper_expect(ue, y) + 1e-12);
      EXPECT_GE(upper_expect(ue, bigger), ex - 1e-12);
      EXPECT_NEAR(upper_expect(ue, scaled), lambda * ex, 1e-12);
      EXPECT_NEAR(upper_expect(ue, shifted), ex + c, 1e-12);
      EXPECT_NEAR(upper_expect(ue, std::vector<double>(n, c)), c, 1e-12);
    }
  }
}

TEST(Invariance, ExactOnPeriodicFamilies) {
  RandomStream rng(43, 0);
  for (const auto& e : oracle::ps_corpus(40, 44)) {
    const auto ue = UpperExpectation::from_periodic(e.pm);
    std::vector<std::vector<double>> battery;
    for (int i = 0; i < 20; ++i) battery.push_back(random_phi(rng, e.p.size()));
    EXPECT_EQ(check_sublinear_invariance(e.p, ue, battery, 0).max_defect, 0.0);
    EXPECT_LE(check_sublinear_invariance(e.p, ue, battery, e.tau).max_defect, 1e-12);
    EXPECT_LE(check_sublinear_invariance(e.p, ue, battery, 1).max_defect, 1e-12);
  }
}

TEST(Invariance, EmpiricalCircleFamily) {
  const auto y = rds::RandomPeriodicPath::circle(rds::Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1));
  const auto rep = check_sublinear_invariance(y, 16, 1.0 / 16.0, joint_battery(), 20000, 45);
  EXPECT_FALSE(rep.exact);
  EXPECT_TRUE(rep.passed(4.0)) << rep.max_abs_z;
}

TEST(Invariance, OffGridTimeRejected) {
  const auto y = rds::RandomPeriodicPath::circle(rds::Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1));
  try {
    check_sublinear_invariance(y, 16, 0.05, joint_battery(), 1000, 46);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridIncommensurate);
  }
}

TEST(TwoInterval, IndicatorOfFirstCopy) {
  const TwoIntervalSystem sys(std::numbers::sqrt2 - 1.0);
  const auto a = IntervalSet::interval(0.0, 1.0);
  EXPECT_EQ(sys.p1(a), 1.0);
  EXPECT_EQ(sys.p2(a), 0.0);
  EXPECT_EQ(sys.capacity(a), 1.0);
  EXPECT_EQ(sys.upper_expect([](double x) { return x < 1.0 ? 1.0 : 0.0; }), 1.0);
  EXPECT_EQ(sys.capacity(IntervalSet::interval(0.5, 1.5)), 0.5);
}

TEST(TwoInterval, StepAndPreimage) {
  const double alpha = std::numbers::sqrt2 - 1.0;
  const TwoIntervalSystem sys(alpha);
  EXPECT_NEAR(sys.step(0.8), std::fmod(0.8 + alpha, 1.0) + 1.0, 1e-15);
  EXPECT_NEAR(sys.step(1.3), 0.3, 1e-15);
  RandomStream rng(47, 0);
  const auto b = IntervalSet({{0.1, 0.3}, {1.2, 1.9}});
  const auto pre = sys.preimage(b);
  for (int i = 0; i < 2000; ++i) {
    const double x = 2.0 * rng.uniform();
    const double y = sys.step(x);
    bool in_b = false, in_pre = false;
    for (auto [lo, hi] : b.pieces()) in_b |= y >= lo && y < hi;
    for (auto [lo, hi] : pre.pieces()) in_pre |= x >= lo && x < hi;
    EXPECT_EQ(in_b, in_pre) << x;
  }
}

TEST(TwoInterval, TrivialSetsPass) {
  const TwoIntervalSystem sys(std::numbers::sqrt2 - 1.0);
  const auto v = sys.ergodic_check({IntervalSet{}, IntervalSet::interval(0.0, 2.0), IntervalSet::interval(0.0, 1.0)});
  ASSERT_EQ(v.sets.size(), 3u);
  EXPECT_TRUE(v.sets[0].passed);
  EXPECT_TRUE(v.sets[1].passed);
  EXPECT_EQ(v.sets[2].status, "NotInvariant");
  EXPECT_FALSE(v.ergodic());
}

TEST(Surrogate, RationalControlIsNotErgodic) {
  const auto sys = two_interval_surrogate(12, 1, 4);
  const auto verdict = sublinear_ergodic_check(sys, std::nullopt);
  EXPECT_FALSE(verdict.ergodic());
  // A single q-orbit doubled across both copies is invariant with V(B) = 1/3.
  Mask orbit = 0;
  for (int i = 0; i < 12; i += 3) orbit |= (Mask{1} << i) | (Mask{1} << (12 + (i + 3) % 12));
  ASSERT_TRUE(is_map_invariant(sys.map, orbit));
  const auto single = sublinear_ergodic_check(sys, std::vector<Mask>{orbit});
  EXPECT_EQ(single.sets[0].status, "non-ergodic");
  EXPECT_NEAR(single.sets[0].capacity, 1.0 / 3.0, 1e-15);
}

TEST(Surrogate, FullCycleIsErgodic) {
  // Rotation by 2 on 5 points is a single orbit, so only trivial sets are invariant.
  const auto sys = two_interval_surrogate(5, 2, 5);
  EXPECT_TRUE(sublinear_ergodic_check(sys, std::nullopt).ergodic());
}

TEST(MapInvariantSets, UnionsOfComponents) {
  const std::vector<int> map{1, 0, 2, 2};  // components {0,1} and {2,3}
  const auto sets = map_invariant_sets(map);
  EXPECT_EQ(sets, (std::vector<Mask>{0b0000, 0b0011, 0b1100, 0b1111}));
  for (Mask b : sets) EXPECT_TRUE(is_map_invariant(map, b));
  EXPECT_FALSE(is_map_invariant(map, 0b0100));
}

TEST(QuasiSureLLN, ConstantObservable) {
  const auto y = rds::RandomPeriodicPath::circle(rds::Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1));
  QSOptions opt;
  opt.horizons = {10, 100};
  opt.n_paths = 8;
  opt.m = 4;
  opt.target = 0.7;
  const auto rep = birkhoff_qs_lln(y, [](const noise::NoiseState&, double) { return 0.7; }, opt);
  for (double f : rep.max_fraction) EXPECT_EQ(f, 0.0);
  for (const auto& row : rep.mean_average)
    for (double v : row) EXPECT_NEAR(v, 0.7, 1e-12);
}

TEST(QuasiSureLLN, FlipChainAlternation) {
  const auto y = rds::RandomPeriodicPath::chain(rds::Cocycle::finite_map({2, {{1, 0}}}), 2, 0);
  QSOptions opt;
  opt.horizons = {100};
  opt.delta = 1.0;
  opt.n_paths = 4;
  opt.m = 2;
  opt.target_samples = 1000;
  const auto rep = birkhoff_qs_lln(y, [](const noise::NoiseState&, double x) { return x == 0.0 ? 1.0 : 0.0; }, opt);
  EXPECT_NEAR(rep.target, 0.5, 1e-12);
  for (double v : rep.mean_average[0]) EXPECT_NEAR(v, 0.5, 1e-12);
  EXPECT_EQ(rep.max_fraction[0], 0.0);
}

TEST(QuasiSureLLN, IrrationalRotationMatchesWeylBound) {
  // Noise coordinate sin(2 pi x) along the unit-time orbit: every path's
  // average is a Weyl sum, bounded by 1/(T |sin(pi alpha)|).
  const auto y = rds::RandomPeriodicPath::circle(rds::Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.0));
  QSOptions opt;
  opt.horizons = {100, 1000};
  opt.n_paths = 16;
  opt.m = 4;
  opt.target = 0.0;
  auto xi = [](const noise::NoiseState& w, double) {
    return std::sin(2.0 * std::numbers::pi * noise::torus_point(w).x);
  };
  const auto rep = birkhoff_qs_lln(y, xi, opt);
  const double bound = 1.0 / (100 * std::sin(std::numbers::pi * (std::numbers::sqrt2 - 1.0)));
  EXPECT_LT(bound, 0.05);
  EXPECT_EQ(rep.max_fraction[0], 0.0);
  EXPECT_TRUE(rep.nonincreasing());
}

TEST(CanonicalRecursion, SingleTimeIsUpperExpectation) {
  const auto ue = flip_family();
  const std::vector<int> times{0};
  auto phi = [](std::span<const int> x) { return x[0] == 0 ? 0.2 : 0.9; };
  EXPECT_EQ(canonical_sublinear_expect(flip(), ue, times, phi), 0.9);
}

TEST(CanonicalRecursion, SingletonFamilyMatchesFdd) {
  RandomStream rng(48, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    const auto p = oracle::random_chain(rng, n);
    const auto pm = markov::find_periodic_measures(p, 1).front();
    const UpperExpectation ue(1.0, {0.0}, {pm.rho[0]});
    const std::vector<int> times{static_cast<int>(rng.below(2)), 2, 2 + 1 + static_cast<int>(rng.below(3))};
    std::vector<double> table(n * n * n);
    for (auto& v : table) v = rng.uniform();
    auto phi = [&](std::span<const int> x) {
      return table[static_cast<std::size_t>(x[0]) * n * n + static_cast<std::size_t>(x[1]) * n +
                   static_cast<std::size_t>(x[2])];
    };
    EXPECT_NEAR(canonical_sublinear_expect(p, ue, times, phi),
                oracle::fdd_sum(oracle::to_rows(p), pm.rho[0], times, phi), 1e-12);
  }
}

TEST(CanonicalRecursion, DimensionMismatch) {
  const std::vector<int> times{0};
  EXPECT_THROW(canonical_sublinear_expect(StochasticMatrix::identity(3), flip_family(), times,
                                          [](std::span<const int>) { return 0.0; }),
               Error);
}
