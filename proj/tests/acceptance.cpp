// Acceptance harness: one PASS/FAIL line per criterion, each timed against
// its runtime budget. Exit status is 0 only when every criterion passes.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ergoperiod/error.hpp"
#include "ergoperiod/markov.hpp"
#include "ergoperiod/noise.hpp"
#include "ergoperiod/rds.hpp"
#include "ergoperiod/sublinear.hpp"
#include "ergoperiod/wiener.hpp"
#include "oracles.hpp"

using namespace ergoperiod;
using markov::DiscretePeriodicMeasure;
using markov::Mask;
using markov::StochasticMatrix;

namespace {

const double kAlpha = std::numbers::sqrt2 - 1.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < limit_seconds;
  const bool ok = out.passed && in_time;
  if (!ok) ++failures;
  std::printf("%s criterion %2d %s: %s [%.2f s, limit %.0f s%s]\n", ok ? "PASS" : "FAIL", id, name,
              out.detail.c_str(), secs, limit_seconds, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

template <class... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

StochasticMatrix permutation(const std::vector<int>& image) {
  const std::size_t n = image.size();
  std::vector<double> e(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) e[i * n + static_cast<std::size_t>(image[i])] = 1.0;
  return StochasticMatrix(n, std::move(e));
}

// --- 1 ---------------------------------------------------------------------

Outcome identity_suites() {
  struct CircleCase {
    const char* name;
    rds::Cocycle cocycle;
  };
  const std::vector<CircleCase> circles{
      {"rotation-free torus", rds::Cocycle::circle_shift(noise::NoiseSystem::torus(kAlpha), 0.0)},
      {"forced torus", rds::Cocycle::circle_shift(noise::NoiseSystem::torus(kAlpha), 0.1)},
      {"forced rotation", rds::Cocycle::circle_shift(noise::NoiseSystem::rotation(kAlpha), 0.1)},
      {"meshed torus", rds::Cocycle::circle_shift(noise::NoiseSystem::torus(kAlpha), 0.1, 1.0, 0.125)},
  };
  double circle_defect = 0.0;
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const auto& c = circles[i].cocycle;
    circle_defect = std::max(circle_defect, rds::verify_cocycle(c, 1000, 100 + i).max_defect);
    circle_defect = std::max(circle_defect, rds::verify_skew_composition(c, 1000, 200 + i).max_defect);
    const auto y = rds::RandomPeriodicPath::circle(c, 0.3);
    circle_defect = std::max(circle_defect, rds::verify_rpp(y, 1000, 300 + i).max_defect);
  }

  // Finite chains: deterministic cycles carry periodic paths; a random
  // mapping of a generic kernel exercises the cocycle identity alone.
  struct ChainCase {
    StochasticMatrix p;
    int tau;
  };
  const std::vector<ChainCase> chains{
      {permutation({1, 0}), 2},
      {permutation({1, 2, 3, 0}), 4},
      {permutation({1, 2, 0, 4, 3}), 6},
  };
  double chain_defect = 0.0;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto c = rds::Cocycle::from_matrix(chains[i].p);
    chain_defect = std::max(chain_defect, rds::verify_cocycle(c, 1000, 400 + i).max_defect);
    chain_defect = std::max(chain_defect, rds::verify_skew_composition(c, 1000, 500 + i).max_defect);
    const auto y = rds::RandomPeriodicPath::chain(c, chains[i].tau, 0);
    chain_defect = std::max(chain_defect, rds::verify_rpp(y, 1000, 600 + i).max_defect);
  }
  RandomStream rng(7, 0);
  const auto mixing = rds::Cocycle::from_matrix(oracle::random_chain(rng, 5));
  chain_defect = std::max(chain_defect, rds::verify_cocycle(mixing, 1000, 700).max_defect);
  chain_defect = std::max(chain_defect, rds::verify_skew_composition(mixing, 1000, 701).max_defect);

  return {circle_defect <= 1e-12 && chain_defect == 0.0,
          format("circle max defect %.3g (<= 1e-12), chain max defect %.3g (== 0)", circle_defect, chain_defect)};
}

// --- 2 ---------------------------------------------------------------------

Outcome preservation_battery() {
  struct Case {
    noise::NoiseSystem sys;
    double t;
  };
  const std::vector<Case> cases{
      {noise::NoiseSystem::rotation(kAlpha), 1.0},
      {noise::NoiseSystem::torus(kAlpha), 0.37},
      {noise::NoiseSystem::bernoulli(2, 8), 3.0},
      {noise::NoiseSystem::wiener(0.01, 1.0), 0.25},
  };
  double worst = 0.0;
  std::size_t count = 0;
  std::string worst_name;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (const auto& obs : noise::standard_battery(cases[i].sys)) {
      const auto rep = noise::check_preservation(cases[i].sys, cases[i].t, obs.fn, 100000, 1000 + 10 * i + count);
      ++count;
      if (std::abs(rep.z_score) >= worst) {
        worst = std::abs(rep.z_score);
        worst_name = cases[i].sys.name() + " / " + obs.name;
      }
    }
  }
  return {count == 20 && worst <= 4.0,
          format("%zu observable/system pairs, max |z| = %.3f (%s)", count, worst, worst_name.c_str())};
}

// --- 3 ---------------------------------------------------------------------

Outcome torus_ergodicity() {
  const auto sys = noise::NoiseSystem::torus(kAlpha);
  constexpr long kN = 10000;
  int within = 0;
  double oracle_gap = 0.0;
  for (std::size_t start = 0; start < 100; ++start) {
    RandomStream rng(3, start);
    noise::NoiseState w = noise::sample_invariant(sys, rng);
    const double x0 = noise::torus_point(w).x;
    double sum = 0.0;
    for (long k = 0; k < kN; ++k) {
      sum += std::sin(kTwoPi * noise::torus_point(w).x);
      w = noise::shift(sys, 1.0, w);
    }
    const double avg = sum / kN;
    if (std::abs(avg) <= 0.05) ++within;
    oracle_gap = std::max(oracle_gap, std::abs(avg - oracle::weyl_sine_average(x0, kAlpha, kN)));
  }
  return {within >= 99 && oracle_gap <= 1e-9,
          format("%d/100 starts within 0.05 of 0; max gap to closed-form Weyl sum %.2g", within, oracle_gap)};
}

// --- 4 ---------------------------------------------------------------------

Outcome discretization_failure() {
  const auto sys = noise::NoiseSystem::torus(kAlpha);
  constexpr int kPaths = 1000, kSteps = 2000;
  int mismatches = 0;
  std::vector<double> limits;
  for (int path = 0; path < kPaths; ++path) {
    RandomStream rng(4, static_cast<std::uint64_t>(path));
    noise::NoiseState w = noise::sample_invariant(sys, rng);
    const double start = noise::torus_point(w).r < 0.5 ? 1.0 : 0.0;
    double sum = 0.0;
    for (int k = 0; k < kSteps; ++k) {
      sum += noise::torus_point(w).r < 0.5 ? 1.0 : 0.0;
      w = noise::shift(sys, 1.0, w);
    }
    const double avg = sum / kSteps;
    if (avg != start) ++mismatches;
    limits.push_back(avg);
  }
  double mean = 0.0;
  for (double v : limits) mean += v;
  mean /= kPaths;
  double var = 0.0;
  for (double v : limits) var += (v - mean) * (v - mean);
  var /= kPaths;
  return {mismatches == 0 && std::abs(var - 0.25) <= 0.02,
          format("%d paths whose limit differs from 1{r0<1/2}; across-path variance %.4f (0.25 +- 0.02)",
                 mismatches, var)};
}

// --- 5 and 7 share the corpus ------------------------------------------------

const std::vector<oracle::CorpusEntry>& corpus() {
  static const auto c = oracle::ps_corpus(1000, 5);
  return c;
}

Outcome ps_agreement() {
  std::size_t total = 0, agree = 0, ergodic = 0, oracle_agree = 0;
  for (const auto& e : corpus()) {
    ++total;
    const bool brute = markov::is_ps_ergodic(e.p, e.tau, e.pm, markov::kDefaultAtol,
                                             markov::EnumerationMethod::BruteForce)
                           .ergodic();
    const bool structural = markov::structural_ps_ergodic(e.p, e.tau, e.pm);
    bool reference = true;
    const auto rows = oracle::to_rows(e.p);
    for (int s = 0; s < e.tau; ++s) reference = reference && oracle::section_ergodic(rows, e.tau, e.pm.rho[s]);
    agree += brute == structural;
    oracle_agree += brute == reference;
    ergodic += structural;
  }
  return {agree == total && oracle_agree == total && total >= 1000,
          format("%zu/%zu measures agree (%zu ergodic, %zu not); independent oracle agrees on %zu", agree, total,
                 ergodic, total - ergodic, oracle_agree)};
}

Outcome condition_a_consistency() {
  std::size_t instances = 0, sections = 0, strengthened = 0;
  for (const auto& e : corpus()) {
    if (!markov::structural_ps_ergodic(e.p, e.tau, e.pm)) continue;
    ++instances;
    const int start = std::countr_zero(markov::support_mask(e.pm.rho[0]));
    const auto y = rds::RandomPeriodicPath::chain(rds::Cocycle::from_matrix(e.p), e.tau, start);
    for (int s = 0; s < e.tau; ++s) {
      const auto fam = markov::enumerate_invariant_sets(e.p, e.tau, e.pm.rho[static_cast<std::size_t>(s)]);
      strengthened += markov::check_condition_A(y, s, fam, 200, 16, 7000 + instances).strengthened_violations;
      ++sections;
    }
  }
  return {strengthened == 0 && instances > 0,
          format("%zu PS-ergodic instances, %zu sections, %zu strengthened violations", instances, sections,
                 strengthened)};
}

// --- 6 ---------------------------------------------------------------------

Outcome worked_instances() {
  std::vector<std::string> problems;
  const auto two_cycles = permutation({1, 0, 3, 2});
  const auto mix = DiscretePeriodicMeasure::from_initial(two_cycles, 2, {0.5, 0, 0.5, 0});
  const auto v1 = markov::is_ps_ergodic(two_cycles, 2, mix);
  const auto& w = v1.sections[0].witness;
  if (v1.ergodic() || !w || markov::mask_labels(*w) != std::vector<int>{1, 2} || v1.sections[0].witness_mass != 0.5)
    problems.push_back("two-cycles mixture");

  const auto four = permutation({1, 2, 3, 0});
  const auto half = DiscretePeriodicMeasure::from_initial(four, 2, {0.5, 0, 0.5, 0});
  if (!markov::is_ps_ergodic(four, 2, half).ergodic() || !markov::structural_ps_ergodic(four, 2, half))
    problems.push_back("4-cycle");

  const auto flip = permutation({1, 0});
  const auto deltas = markov::find_periodic_measures(flip, 2);
  if (deltas.size() != 2) problems.push_back("flip extremals");
  for (const auto& pm : deltas)
    if (!markov::is_ps_ergodic(flip, 2, pm).ergodic()) problems.push_back("flip delta");

  std::string detail = problems.empty() ? "mixture not ergodic with witness {1,2}; 4-cycle and flip deltas ergodic"
                                        : "mismatch:";
  for (const auto& p : problems) detail += " " + p;
  return {problems.empty(), detail};
}

// --- 8 ---------------------------------------------------------------------

Outcome sublinear_identities() {
  std::vector<std::pair<StochasticMatrix, DiscretePeriodicMeasure>> families;
  families.emplace_back(permutation({1, 0}), DiscretePeriodicMeasure::from_initial(permutation({1, 0}), 2, {1, 0}));
  const auto& c = corpus();
  for (std::size_t i = 0; i < c.size() && families.size() < 60; i += 7) families.emplace_back(c[i].p, c[i].pm);

  RandomStream rng(8, 0);
  auto draw = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = 4.0 * rng.uniform() - 2.0;
    return v;
  };
  double worst = 0.0;  // largest violation of any identity
  std::size_t checked = 0;
  for (const auto& [p, pm] : families) {
    const auto ue = sublinear::UpperExpectation::from_periodic(pm);
    const std::size_t n = p.size();
    std::vector<std::vector<double>> battery;
    for (int k = 0; k < 100; ++k) {
      const auto x = draw(n), y = draw(n);
      const double lambda = 3.0 * rng.uniform(), c0 = rng.uniform() - 0.5;
      std::vector<double> sum(n), above(n), scaled(n), moved(n);
      for (std::size_t i = 0; i < n; ++i) {
        sum[i] = x[i] + y[i];
        above[i] = x[i] + rng.uniform();
        scaled[i] = lambda * x[i];
        moved[i] = x[i] + c0;
      }
      const double ex = sublinear::upper_expect(ue, x);
      worst = std::max(worst, sublinear::upper_expect(ue, sum) - ex - sublinear::upper_expect(ue, y));
      worst = std::max(worst, ex - sublinear::upper_expect(ue, above));
      worst = std::max(worst, std::abs(sublinear::upper_expect(ue, scaled) - lambda * ex));
      worst = std::max(worst, std::abs(sublinear::upper_expect(ue, moved) - ex - c0));
      worst = std::max(worst, std::abs(sublinear::upper_expect(ue, std::vector<double>(n, c0)) - c0));
      battery.push_back(x);
      ++checked;
    }
    worst = std::max(worst, sublinear::check_sublinear_invariance(p, ue, battery, pm.tau).max_defect);
  }
  const sublinear::TwoIntervalSystem two(kAlpha);
  const double e_first = two.upper_expect([](double x) { return x < 1.0 ? 1.0 : 0.0; });
  const double v_first = two.capacity(sublinear::IntervalSet::interval(0.0, 1.0));
  return {worst <= 1e-12 && e_first == 1.0 && v_first == 1.0,
          format("%zu families x 100 observables, worst identity defect %.3g; E[1_[0,1)] = %.17g", families.size(),
                 worst, e_first)};
}

// --- 9 ---------------------------------------------------------------------

Outcome canonical_recursion() {
  std::vector<std::vector<int>> windows;
  for (int a = 0; a <= 4; ++a) {
    windows.push_back({a});
    for (int b = a + 1; b <= 4; ++b) {
      windows.push_back({a, b});
      for (int c = b + 1; c <= 4; ++c) windows.push_back({a, b, c});
    }
  }
  RandomStream rng(9, 0);
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int chain = 0; chain < 40; ++chain) {
      const auto p = oracle::random_chain(rng, n, 0.5);
      const auto extremals = markov::find_periodic_measures(p, 1);
      // Any convex combination of stationary vectors is invariant.
      std::vector<double> rho(n, 0.0);
      double total = 0.0;
      for (const auto& e : extremals) {
        const double w = 0.1 + rng.uniform();
        total += w;
        for (std::size_t i = 0; i < n; ++i) rho[i] += w * e.rho[0][i];
      }
      for (double& r : rho) r /= total;
      const sublinear::UpperExpectation ue(1.0, {0.0}, {rho});
      for (const auto& times : windows) {
        std::vector<double> table(static_cast<std::size_t>(std::pow(n, times.size())));
        for (double& v : table) v = 2.0 * rng.uniform() - 1.0;
        auto phi = [&](std::span<const int> x) {
          std::size_t idx = 0;
          for (int s : x) idx = idx * n + static_cast<std::size_t>(s);
          return table[idx];
        };
        const double got = sublinear::canonical_sublinear_expect(p, ue, times, phi);
        const double want = oracle::fdd_sum(oracle::to_rows(p), rho, times, phi);
        worst = std::max(worst, std::abs(got - want));
        ++cases;
      }
    }
  }
  return {worst <= 1e-12, format("%zu (chain, window) cases, max |recursion - FDD sum| = %.3g", cases, worst)};
}

// --- 10 --------------------------------------------------------------------

Outcome quasi_sure_lln() {
  struct Case {
    const char* name;
    double amplitude;
    double delta;
    sublinear::JointObservable xi;
    double target;
  };
  const std::vector<Case> battery{
      {"sin(2 pi noise x), time-1 map, f=0", 0.0, 1.0,
       [](const noise::NoiseState& w, double) { return std::sin(kTwoPi * noise::torus_point(w).x); }, 0.0},
      {"sin(2 pi phase), delta 1/8", 0.1, 0.125, [](const noise::NoiseState&, double x) { return std::sin(kTwoPi * x); },
       0.0},
      {"1{phase<1/2}, delta 1/8", 0.1, 0.125, [](const noise::NoiseState&, double x) { return x < 0.5 ? 1.0 : 0.0; },
       0.5},
  };
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    const auto& c = battery[i];
    const auto y = rds::RandomPeriodicPath::circle(
        rds::Cocycle::circle_shift(noise::NoiseSystem::torus(kAlpha), c.amplitude), 0.0);
    sublinear::QSOptions opt;
    opt.horizons = {100, 1000, 10000};
    opt.delta = c.delta;
    opt.n_paths = 64;
    opt.m = 16;
    opt.epsilon = 0.05;
    opt.target = c.target;
    opt.seed = 10 + i;
    const auto rep = sublinear::birkhoff_qs_lln(y, c.xi, opt);
    const bool case_ok = rep.max_fraction.back() <= 0.01 && rep.nonincreasing();
    ok = ok && case_ok;
    detail << (i ? "; " : "") << c.name << ": max fraction";
    for (double f : rep.max_fraction) detail << ' ' << f;
    if (!rep.nonincreasing()) detail << " (increasing)";
  }
  return {ok, detail.str()};
}

// --- 11 --------------------------------------------------------------------

Outcome wiener_shift() {
  constexpr double kTau = 0.25, kMesh = 0.01;
  constexpr std::size_t kN = 100000;
  bool ok = true;
  std::ostringstream detail;
  for (const auto& f : wiener::standard_battery(kTau)) {
    const auto rep = wiener::birkhoff_shift_average(f, kTau, kN, kMesh, 11);
    ok = ok && rep.passed(4.0);
    detail << f.name << " " << rep.estimate << " (target " << *rep.target << ", z " << rep.z() << "); ";
  }
  const auto battery = wiener::standard_battery(kTau);
  const wiener::CylinderFunctional w{"W(tau)", {kTau}, 1, [](std::span<const double> v) { return v[0]; },
                                     std::nullopt};
  double worst = 0.0;
  const std::vector<int> lags{1, 2, 4};
  for (const auto& c : wiener::decorrelation(battery[0], battery[0], kTau, lags, kN, kMesh, 12))
    worst = std::max(worst, std::abs(c.z()));
  for (const auto& c : wiener::decorrelation(w, w, kTau, std::vector<int>{1}, kN, kMesh, 13))
    worst = std::max(worst, std::abs(c.z()));
  // The two-step functional occupies two blocks; lags of 2 and more are disjoint.
  for (const auto& c : wiener::decorrelation(battery[2], battery[2], kTau, std::vector<int>{2, 3}, kN, kMesh, 14))
    worst = std::max(worst, std::abs(c.z()));
  ok = ok && worst <= 4.0;
  detail << "max decorrelation |z| " << worst;
  return {ok, detail.str()};
}

}  // namespace

int main() {
  criterion(1, "cocycle and periodic-path identities", 5, identity_suites);
  criterion(2, "measure-preservation battery", 30, preservation_battery);
  criterion(3, "torus ergodicity", 20, torus_ergodicity);
  criterion(4, "non-ergodic time-1 discretization", 10, discretization_failure);
  criterion(5, "PS-ergodicity oracle agreement", 60, ps_agreement);
  criterion(6, "worked PS-ergodicity instances", 1, worked_instances);
  criterion(7, "Condition A on PS-ergodic instances", 30, condition_a_consistency);
  criterion(8, "sublinear expectation identities", 5, sublinear_identities);
  criterion(9, "canonical sublinear recursion", 5, canonical_recursion);
  criterion(10, "quasi-sure Birkhoff LLN", 60, quasi_sure_lln);
  criterion(11, "discrete Wiener shift", 60, wiener_shift);
  std::printf("%s: %d of 11 criteria failed\n", failures == 0 ? "ALL PASS" : "SOME FAILED", failures);
  return failures == 0 ? 0 : 1;
}
