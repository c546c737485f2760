#pragma once

// Orbits of the discrete Wiener shift theta_tau on a Brownian increment grid,
// and the statistics taken along them.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergoperiod/noise.hpp"

namespace ergoperiod::wiener {

/// F(omega) = map(W(t_1), ..., W(t_k)) with 0 < t_i <= depth * tau.
struct CylinderFunctional {
  std::string name;
  std::vector<double> times;
  int depth = 1;
  std::function<double(std::span<const double>)> map;
  std::optional<double> target;
};

/// I{W(tau) > 0} -> 1/2, W(tau)^2 -> tau, I{W(tau) > 0, W(2 tau) > 0} -> 3/8.
std::vector<CylinderFunctional> standard_battery(double tau);

/// Noise system whose horizon covers the functional's window.
noise::NoiseSystem window_system(const CylinderFunctional& f, double tau, double h);

double evaluate(const CylinderFunctional& f, const noise::NoiseSystem& sys, const noise::IncrementPath& path);

struct ShiftAverageReport {
  std::string functional;
  std::size_t n = 0;
  double tau = 0.0;
  double mesh = 0.0;
  double estimate = 0.0;
  double stderr_bootstrap = 0.0;
  double stderr_naive = 0.0;
  std::size_t block_length = 0;
  std::optional<double> target;
  std::vector<std::pair<double, double>> running;  // (n, running average)

  double z() const;
  bool passed(double z_max = 4.0) const;
};

struct OrbitOptions {
  std::size_t bootstrap_resamples = 200;
  std::size_t running_points = 1000;
  std::size_t block_length = 0;  // 0: functional depth
};

/// (1/N) sum_{n<N} F(theta_{n tau} omega) along one orbit streamed through a
/// rolling increment window.
ShiftAverageReport birkhoff_shift_average(const CylinderFunctional& f, double tau, std::size_t n_shifts, double h,
                                          std::uint64_t seed, const OrbitOptions& options = {});

/// The values F(theta_{n tau} omega), n < count.
std::vector<double> orbit_values(const CylinderFunctional& f, double tau, std::size_t count, double h,
                                 std::uint64_t seed);

/// Mean of F over n independent paths.
struct IidMean {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  std::size_t n = 0;
};
IidMean iid_mean(const CylinderFunctional& f, double tau, std::size_t n, double h, std::uint64_t seed,
                 unsigned workers = 1);

struct LagCovariance {
  int lag = 0;
  double covariance = 0.0;
  double stderr_of_cov = 0.0;
  double z() const;
};

/// cov(F, G o theta_{lag tau}) along one orbit, block-bootstrap standard
/// errors with block length lag + depth.
std::vector<LagCovariance> decorrelation(const CylinderFunctional& f, const CylinderFunctional& g, double tau,
                                         std::span<const int> lags, std::size_t n_shifts, double h,
                                         std::uint64_t seed, std::size_t resamples = 200);

struct RegenerationReport {
  double ks = 0.0;
  double critical = 0.0;
  std::size_t n = 0;
  bool passed() const { return ks < critical; }
};

/// KS comparison of increments regenerated by a full-horizon shift against
/// increments of fresh paths, at level alpha.
RegenerationReport check_regeneration(double h, double horizon, std::size_t n, std::uint64_t seed,
                                      double alpha = 0.01);

}  // namespace ergoperiod::wiener
