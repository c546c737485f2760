#include "ergoperiod/wiener.hpp"

#include <algorithm>
#include <cmath>

#include "ergoperiod/error.hpp"
#include "ergoperiod/parallel.hpp"
#include "ergoperiod/stats.hpp"

namespace ergoperiod::wiener {
namespace {

constexpr std::uint64_t kFreshSeedMix = 0xA0761D6478BD642Full;

void check_functional(const CylinderFunctional& f, double tau) {
  require(tau > 0.0, "tau must be positive");
  require(f.depth >= 1, "functional depth must be >= 1");
  require(!f.times.empty() && static_cast<bool>(f.map), "functional needs times and a map");
  for (double t : f.times)
    require(t > 0.0 && t <= f.depth * tau * (1.0 + 1e-12), "functional times must lie in (0, depth tau]");
}

}  // namespace

std::vector<CylinderFunctional> standard_battery(double tau) {
  return {
      {"1{W(tau)>0}", {tau}, 1, [](std::span<const double> w) { return w[0] > 0.0 ? 1.0 : 0.0; }, 0.5},
      {"W(tau)^2", {tau}, 1, [](std::span<const double> w) { return w[0] * w[0]; }, tau},
      {"1{W(tau)>0,W(2tau)>0}",
       {tau, 2.0 * tau},
       2,
       [](std::span<const double> w) { return w[0] > 0.0 && w[1] > 0.0 ? 1.0 : 0.0; },
       0.375},
  };
}

noise::NoiseSystem window_system(const CylinderFunctional& f, double tau, double h) {
  check_functional(f, tau);
  require(h > 0.0, "mesh must be positive");
  return noise::NoiseSystem::wiener(h, f.depth * tau);
}

double evaluate(const CylinderFunctional& f, const noise::NoiseSystem& sys, const noise::IncrementPath& path) {
  std::vector<double> values;
  values.reserve(f.times.size());
  for (double t : f.times) values.push_back(noise::wiener_value(sys, path, t));
  return f.map(values);
}

std::vector<double> orbit_values(const CylinderFunctional& f, double tau, std::size_t count, double h,
                                 std::uint64_t seed) {
  const auto sys = window_system(f, tau, h);
  (void)sys.steps(tau);
  RandomStream rng(seed, 0);
  noise::NoiseState omega = noise::sample_invariant(sys, rng);
  std::vector<double> values;
  values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    values.push_back(evaluate(f, sys, std::get<noise::IncrementPath>(omega)));
    if (i + 1 < count) omega = noise::shift(sys, tau, omega);
  }
  return values;
}

double ShiftAverageReport::z() const {
  return target ? stats::z_ratio(estimate - *target, stderr_bootstrap) : 0.0;
}

bool ShiftAverageReport::passed(double z_max) const { return std::abs(z()) <= z_max; }

ShiftAverageReport birkhoff_shift_average(const CylinderFunctional& f, double tau, std::size_t n_shifts, double h,
                                          std::uint64_t seed, const OrbitOptions& options) {
  require(n_shifts >= 100, "orbit averages need N >= 100");
  const auto values = orbit_values(f, tau, n_shifts, h, seed);
  ShiftAverageReport report;
  report.functional = f.name;
  report.n = n_shifts;
  report.tau = tau;
  report.mesh = h;
  report.target = f.target;
  report.block_length = options.block_length > 0 ? options.block_length : static_cast<std::size_t>(f.depth);
  report.estimate = stats::mean(values);
  report.stderr_naive = std::sqrt(stats::variance(values) / static_cast<double>(n_shifts));
  report.stderr_bootstrap =
      stats::block_bootstrap_stderr(values, report.block_length, options.bootstrap_resamples, seed);
  const std::size_t stride = std::max<std::size_t>(1, n_shifts / std::max<std::size_t>(1, options.running_points));
  double acc = 0.0;
  for (std::size_t i = 0; i < n_shifts; ++i) {
    acc += values[i];
    if ((i + 1) % stride == 0 || i + 1 == n_shifts)
      report.running.emplace_back(static_cast<double>(i + 1), acc / static_cast<double>(i + 1));
  }
  return report;
}

IidMean iid_mean(const CylinderFunctional& f, double tau, std::size_t n, double h, std::uint64_t seed,
                 unsigned workers) {
  require(n >= 2, "i.i.d. mean needs n >= 2");
  const auto sys = window_system(f, tau, h);
  auto partials = map_tasks(chunk_count(n), workers, [&](std::size_t chunk) {
    stats::RunningStats acc;
    const std::size_t end = std::min(n, (chunk + 1) * kSampleChunk);
    for (std::size_t i = chunk * kSampleChunk; i < end; ++i) {
      RandomStream rng(seed ^ kFreshSeedMix, i);
      const auto omega = noise::sample_invariant(sys, rng);
      acc.add(evaluate(f, sys, std::get<noise::IncrementPath>(omega)));
    }
    return acc;
  });
  stats::RunningStats all;
  for (const auto& p : partials) all.merge(p);
  return {all.mean(), all.stderr_of_mean(), n};
}

double LagCovariance::z() const { return stats::z_ratio(covariance, stderr_of_cov); }

std::vector<LagCovariance> decorrelation(const CylinderFunctional& f, const CylinderFunctional& g, double tau,
                                         std::span<const int> lags, std::size_t n_shifts, double h,
                                         std::uint64_t seed, std::size_t resamples) {
  require(!lags.empty(), "decorrelation needs at least one lag");
  require(n_shifts >= 100, "decorrelation needs N >= 100");
  int max_lag = 0;
  for (int lag : lags) {
    require(lag >= 0, "lags must be >= 0");
    max_lag = std::max(max_lag, lag);
  }
  const std::size_t count = n_shifts + static_cast<std::size_t>(max_lag);
  // Both functionals read the same orbit, so give them one window wide
  // enough for either.
  CylinderFunctional fw = f, gw = g;
  fw.depth = gw.depth = std::max(f.depth, g.depth);
  const auto fv = orbit_values(fw, tau, count, h, seed);
  const auto gv = orbit_values(gw, tau, count, h, seed);
  const int depth = fw.depth;

  std::vector<LagCovariance> out;
  for (int lag : lags) {
    const auto l = static_cast<std::size_t>(lag);
    const std::span<const double> a(fv.data(), n_shifts);
    const std::span<const double> b(gv.data() + l, n_shifts);
    const double ma = stats::mean(a);
    const double mb = stats::mean(b);
    std::vector<double> products(n_shifts);
    for (std::size_t i = 0; i < n_shifts; ++i) products[i] = (a[i] - ma) * (b[i] - mb);
    LagCovariance c;
    c.lag = lag;
    c.covariance = stats::mean(products);
    c.stderr_of_cov =
        stats::block_bootstrap_stderr(products, l + static_cast<std::size_t>(depth), resamples, seed + l);
    out.push_back(c);
  }
  return out;
}

RegenerationReport check_regeneration(double h, double horizon, std::size_t n, std::uint64_t seed, double alpha) {
  require(n >= 10, "regeneration check needs n >= 10");
  const auto sys = noise::NoiseSystem::wiener(h, horizon);
  std::vector<double> regenerated(n), fresh(n);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream a(seed, i);
    const auto omega = noise::sample_invariant(sys, a);
    const auto moved = noise::shift(sys, horizon, omega);
    regenerated[i] = std::get<noise::IncrementPath>(moved).increments.front();
    RandomStream b(seed ^ kFreshSeedMix, i);
    fresh[i] = std::get<noise::IncrementPath>(noise::sample_invariant(sys, b)).increments.front();
  }
  RegenerationReport report;
  report.n = n;
  report.ks = stats::ks_statistic(std::move(regenerated), std::move(fresh));
  report.critical = stats::ks_critical(n, n, alpha);
  return report;
}

}  // namespace ergoperiod::wiener
