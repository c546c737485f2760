#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ergoperiod/error.hpp"
#include "ergoperiod/rds.hpp"
#include "oracles.hpp"

using namespace ergoperiod;
using namespace ergoperiod::rds;
using markov::StochasticMatrix;

namespace {

FiniteMap cycle_map(int n) {
  FiniteMap m{n, {std::vector<int>(static_cast<std::size_t>(n))}};
  for (int i = 0; i < n; ++i) m.maps[0][static_cast<std::size_t>(i)] = (i + 1) % n;
  return m;
}

}  // namespace

TEST(Cocycle, PureRotationExample) {
  const auto phi = Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.0, 1.0);
  const double y = phi.apply(0.4, noise::TorusPoint{0.1, 0.7}, 0.9);
  EXPECT_NEAR(y, 0.3, 1e-15);
}

TEST(Cocycle, ZeroTimeIsIdentity) {
  const auto circ = Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1);
  EXPECT_EQ(circ.apply(0.0, noise::TorusPoint{0.2, 0.3}, 0.77), 0.77);
  const auto fin = Cocycle::finite_map(cycle_map(3));
  RandomStream rng(1, 0);
  const auto w = noise::sample_invariant(fin.noise(), rng);
  EXPECT_EQ(fin.apply(0.0, w, 2.0), 2.0);
}

TEST(Cocycle, IdentitySuites) {
  EXPECT_LE(verify_cocycle(Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.0), 1000, 1).max_defect, 1e-12);
  EXPECT_LE(verify_cocycle(Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1), 1000, 2).max_defect, 1e-12);
  EXPECT_LE(verify_cocycle(Cocycle::circle_shift(noise::NoiseSystem::rotation(), 0.1), 1000, 3).max_defect, 1e-12);
  const auto p = StochasticMatrix::from_rows({{0.2, 0.8, 0.0}, {0.0, 0.5, 0.5}, {1.0, 0.0, 0.0}});
  EXPECT_EQ(verify_cocycle(Cocycle::from_matrix(p), 1000, 4).max_defect, 0.0);
  EXPECT_EQ(verify_skew_composition(Cocycle::from_matrix(p), 500, 5).max_defect, 0.0);
  EXPECT_LE(verify_skew_composition(Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1), 500, 6).max_defect,
            1e-12);
}

TEST(Cocycle, RejectsOffGridTimes) {
  const auto phi = Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1, 1.0, 0.25);
  EXPECT_THROW(phi.apply(0.3, noise::TorusPoint{}, 0.0), Error);
  EXPECT_NO_THROW(phi.apply(0.5, noise::TorusPoint{}, 0.0));
}

TEST(RandomMapping, MixtureReproducesKernel) {
  RandomStream rng(7, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_chain(rng, 1 + rng.below(6));
    const auto rm = random_mapping(p);
    ASSERT_EQ(rm.map.maps.size(), rm.weights.size());
    for (std::size_t x = 0; x < p.size(); ++x)
      for (std::size_t y = 0; y < p.size(); ++y) {
        double total = 0.0;
        for (std::size_t k = 0; k < rm.weights.size(); ++k)
          if (rm.map.maps[k][x] == static_cast<int>(y)) total += rm.weights[k];
        EXPECT_NEAR(total, p(x, y), 1e-12);
      }
  }
}

TEST(RandomPeriodicPath, BuiltinCircleIdentities) {
  const auto y = RandomPeriodicPath::circle(Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1), 0.3);
  EXPECT_LE(verify_rpp(y, 1000, 11).max_defect, 1e-12);
}

TEST(RandomPeriodicPath, DegenerateRotationOrbit) {
  const auto y = RandomPeriodicPath::circle(Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.0));
  EXPECT_LE(verify_rpp(y, 1000, 12).max_defect, 1e-12);
  EXPECT_NEAR(y.eval(0.35, noise::TorusPoint{0.6, 0.1}), 0.35, 1e-15);
}

TEST(RandomPeriodicPath, StationaryPathOnFixedPointCocycle) {
  // Zero velocity and zero forcing: every point is fixed, Y(s) = y0.
  const auto phi = Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.0, 0.0);
  const auto y = RandomPeriodicPath::circle(phi, 0.42, 0.5);
  EXPECT_LE(verify_rpp(y, 500, 13).max_defect, 1e-12);
  RandomStream rng(1, 1);
  const auto w = noise::sample_invariant(phi.noise(), rng);
  EXPECT_EQ(y.at_section(0.3, w), y.eval(0.0, w));
}

TEST(RandomPeriodicPath, DeterministicCycleChain) {
  const auto y = RandomPeriodicPath::chain(Cocycle::finite_map(cycle_map(4)), 4, 0);
  EXPECT_EQ(verify_rpp(y, 1000, 14).max_defect, 0.0);
}

TEST(TraceSet, CircleDegenerateIsSinglePoint) {
  const auto y = RandomPeriodicPath::circle(Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.0));
  const auto tr = trace_set(y, 0.2, noise::TorusPoint{0.5, 0.5}, 0, 4);
  ASSERT_EQ(tr.points.size(), 5u);
  for (double p : tr.points) EXPECT_NEAR(p, 0.2, 1e-12);
}

TEST(TraceSet, SwapChainReturnsToStart) {
  const auto y = RandomPeriodicPath::chain(Cocycle::finite_map(cycle_map(2)), 2, 0);
  RandomStream rng(2, 0);
  const auto w = noise::sample_invariant(y.cocycle().noise(), rng);
  for (double p : trace_set(y, 0.0, w, 0, 7).points) EXPECT_EQ(p, 0.0);
}

TEST(TraceSet, FourCycleHalfPeriodAlternates) {
  const auto y = RandomPeriodicPath::chain(Cocycle::finite_map(cycle_map(4)), 2, 0);
  RandomStream rng(3, 0);
  const auto w = noise::sample_invariant(y.cocycle().noise(), rng);
  const auto tr = trace_set(y, 0.0, w, 0, 5);
  // Oracle: iterate the cycle by hand, two steps per period.
  int state = 0;
  for (double p : tr.points) {
    EXPECT_EQ(p, state);
    state = (state + 2) % 4;
  }
}

TEST(SkewProduct, ZeroTimeIdentityAndComposition) {
  const auto phi = Cocycle::circle_shift(noise::NoiseSystem::torus(), 0.1);
  SkewState s{noise::TorusPoint{0.3, 0.8}, 0.4};
  const auto same = skew_step(phi, 0.0, s);
  EXPECT_EQ(same.x, s.x);
  const auto a = skew_step(phi, 0.7, skew_step(phi, 0.5, s));
  const auto b = skew_step(phi, 1.2, s);
  EXPECT_LE(noise::circle_distance(a.x, b.x), 1e-12);
}
