#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ergoperiod::stats {

/// Welford accumulator; mergeable so chunked reductions stay exact in order.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance (0 for fewer than two values).
  double variance() const;
  double stderr_of_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// z for a difference of two independent means; 0 when both spreads vanish
/// and the means agree, +-inf when they vanish and the means differ.
double two_sample_z(double mean1, double var1, std::size_t n1, double mean2, double var2,
                    std::size_t n2);

/// Pooled two-proportion z statistic.
double proportion_z(double p1, std::size_t n1, double p2, std::size_t n2);

/// Ratio of an estimate error to its standard error with the same 0/inf
/// conventions as two_sample_z.
double z_ratio(double difference, double stderr);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);

/// Moving-block bootstrap standard error of the sample mean.
double block_bootstrap_stderr(std::span<const double> xs, std::size_t block_length,
                              std::size_t resamples, std::uint64_t seed);

/// Two-sample Kolmogorov-Smirnov statistic sup|F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample KS critical value at level alpha.
double ks_critical(std::size_t n, std::size_t m, double alpha);

}  // namespace ergoperiod::stats
