#include "ergoperiod/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergoperiod/error.hpp"
#include "ergoperiod/random.hpp"

namespace ergoperiod::stats {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double total = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.n_) / total;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / total;
  n_ += other.n_;
}

double RunningStats::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::stderr_of_mean() const {
  return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

double z_ratio(double difference, double stderr) {
  if (stderr > 0.0) return difference / stderr;
  if (difference == 0.0) return 0.0;
  return difference > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
}

double two_sample_z(double mean1, double var1, std::size_t n1, double mean2, double var2,
                    std::size_t n2) {
  require(n1 > 0 && n2 > 0, "two_sample_z needs non-empty samples");
  const double se = std::sqrt(var1 / static_cast<double>(n1) + var2 / static_cast<double>(n2));
  return z_ratio(mean1 - mean2, se);
}

double proportion_z(double p1, std::size_t n1, double p2, std::size_t n2) {
  require(n1 > 0 && n2 > 0, "proportion_z needs non-empty samples");
  const double pooled = (p1 * static_cast<double>(n1) + p2 * static_cast<double>(n2)) /
                        static_cast<double>(n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) *
                              (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  return z_ratio(p1 - p2, se);
}

double mean(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return s.mean();
}

double variance(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return s.variance();
}

double block_bootstrap_stderr(std::span<const double> xs, std::size_t block_length,
                              std::size_t resamples, std::uint64_t seed) {
  require(!xs.empty(), "bootstrap of an empty series");
  require(block_length >= 1 && resamples >= 2, "bootstrap needs block >= 1 and >= 2 resamples");
  const std::size_t n = xs.size();
  block_length = std::min(block_length, n);
  // Prefix sums make each block O(1).
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + xs[i];
  const std::size_t starts = n - block_length + 1;
  const std::size_t blocks = (n + block_length - 1) / block_length;
  RandomStream rng(seed, 0xB007);
  RunningStats means;
  for (std::size_t r = 0; r < resamples; ++r) {
    double total = 0.0;
    std::size_t taken = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t start = rng.below(starts);
      const std::size_t len = std::min(block_length, n - taken);
      total += prefix[start + len] - prefix[start];
      taken += len;
    }
    means.add(total / static_cast<double>(taken));
  }
  return std::sqrt(means.variance());
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "KS statistic needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "KS level must lie in (0,1)");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace ergoperiod::stats
