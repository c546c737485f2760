#pragma once

// Cocycles Phi(t, omega) over a noise system, random periodic paths Y(s, omega)
// and the skew product Theta_t(omega, x) = (theta_t omega, Phi(t, omega) x).
//
// Phase points are doubles: a point of the circle [0,1), or a state index
// 0..n-1 of a finite set stored exactly.

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "ergoperiod/noise.hpp"
#include "ergoperiod/stochastic_matrix.hpp"

namespace ergoperiod::rds {

using noise::NoiseState;
using noise::NoiseSystem;
using PhasePoint = double;

struct Circle {};
struct FiniteSet {
  int n = 0;
};
using PhaseSpace = std::variant<Circle, FiniteSet>;

/// Phi(t, omega) x = x + v t + f(theta_t omega) - f(omega)  (mod 1).
struct CircleShift {
  double velocity = 1.0;
  std::function<double(const NoiseState&)> forcing;
  std::string forcing_name;
};

/// Forcing a * sin(2 pi x) in the rotation coordinate x of the noise.
CircleShift sine_forcing(double amplitude, double velocity = 1.0);

/// Phi(1, omega) x = maps[omega_0][x]; one map per noise symbol.
struct FiniteMap {
  int n = 0;
  std::vector<std::vector<int>> maps;
};

/// A finite family of deterministic maps with symbol weights whose mixture
/// is the given kernel: P(x, y) = sum_k weights[k] * [maps[k][x] == y].
struct RandomMapping {
  FiniteMap map;
  std::vector<double> weights;
};

/// Quantile coupling: all rows are driven by one uniform, so the symbol
/// alphabet is the common refinement of the row CDF breakpoints.
RandomMapping random_mapping(const markov::StochasticMatrix& p);

class Cocycle {
 public:
  /// `mesh` > 0 restricts admissible times to multiples of it.
  Cocycle(NoiseSystem noise, CircleShift rule, double mesh = 0.0);
  Cocycle(NoiseSystem noise, FiniteMap rule);

  static Cocycle circle_shift(NoiseSystem noise, double amplitude = 0.1, double velocity = 1.0,
                              double mesh = 0.0);
  /// FiniteMap over a Bernoulli shift carrying `weights` on the symbols.
  static Cocycle finite_map(FiniteMap rule, std::vector<double> weights = {}, int window = 8);
  static Cocycle from_matrix(const markov::StochasticMatrix& p, int window = 8);

  PhasePoint apply(double t, const NoiseState& omega, PhasePoint x) const;

  const NoiseSystem& noise() const { return noise_; }
  PhaseSpace phase_space() const;
  bool finite() const { return std::holds_alternative<FiniteMap>(rule_); }
  const CircleShift* circle_rule() const { return std::get_if<CircleShift>(&rule_); }
  const FiniteMap* finite_rule() const { return std::get_if<FiniteMap>(&rule_); }
  double mesh() const { return mesh_; }

  /// Validates t against the noise grid and the cocycle mesh.
  void check_time(double t) const;
  double phase_distance(PhasePoint a, PhasePoint b) const;
  PhasePoint sample_phase(RandomStream& rng) const;
  std::string name() const;

 private:
  NoiseSystem noise_;
  std::variant<CircleShift, FiniteMap> rule_;
  double mesh_ = 0.0;
};

/// Y(s, omega) = y0 + v s + f(theta_s omega) for a circle-shift cocycle.
/// With v = 0 this is a stationary path and the period is the declared one.
struct CirclePath {
  double offset = 0.0;
};

/// Y(s, omega) = Phi(s, omega) Y(0, omega) on a finite chain, with Y(0, .)
/// drawn from `start_law` (a point mass gives a deterministic start).
struct ChainPath {
  std::vector<double> start_law;
};

struct CustomPath {
  std::function<PhasePoint(double, const NoiseState&)> eval;
  std::function<PhasePoint(double, const NoiseState&)> at_section;
};

class RandomPeriodicPath {
 public:
  RandomPeriodicPath(Cocycle cocycle, double period, std::variant<CirclePath, ChainPath, CustomPath> rule);

  static RandomPeriodicPath circle(Cocycle cocycle, double offset = 0.0, double declared_period = 1.0);
  static RandomPeriodicPath chain(Cocycle cocycle, int period, int start_state);
  static RandomPeriodicPath chain(Cocycle cocycle, int period, std::vector<double> start_law);

  PhasePoint eval(double s, const NoiseState& omega) const;
  /// Y(s, theta_{-s} omega): the phase component of a mu_s-sample built from
  /// omega ~ P. Two-sided noise uses the closed form; one-sided noise
  /// absorbs the offset into the path, which gives the same law.
  PhasePoint at_section(double s, const NoiseState& omega) const;

  double period() const { return period_; }
  const Cocycle& cocycle() const { return cocycle_; }
  /// Period as declared; minimality is never certified.
  static constexpr const char* kPeriodNote = "period as declared, minimality unverified";

 private:
  Cocycle cocycle_;
  double period_;
  std::variant<CirclePath, ChainPath, CustomPath> rule_;
};

struct SkewState {
  NoiseState omega;
  PhasePoint x = 0.0;
};

SkewState skew_step(const Cocycle& phi, double t, const SkewState& state);

struct TraceSet {
  double s = 0.0;
  int k_min = 0;
  int k_max = 0;
  std::vector<PhasePoint> points;  // Y(s + k tau, omega), k = k_min..k_max
};

TraceSet trace_set(const RandomPeriodicPath& y, double s, const NoiseState& omega, int k_min, int k_max);

struct VerificationReport {
  double max_defect = 0.0;
  std::size_t trials = 0;
  double tol = 0.0;
  bool passed() const { return max_defect <= tol; }
};

/// max dist(Phi(t+s, omega) x, Phi(t, theta_s omega) Phi(s, omega) x), together
/// with Phi(0, omega) = id, over random (t, s, omega, x).
VerificationReport verify_cocycle(const Cocycle& phi, std::size_t n_trials, std::uint64_t seed,
                                  double tol = 1e-12);

/// Both random-periodic-path identities:
///   Phi(t, theta_s omega) Y(s, omega) = Y(t + s, omega)
///   Y(s + tau, omega) = Y(s, theta_tau omega).
VerificationReport verify_rpp(const RandomPeriodicPath& y, std::size_t n_trials, std::uint64_t seed,
                              double tol = 1e-12);

/// max dist of skew_step(t, skew_step(s, .)) from skew_step(t + s, .).
VerificationReport verify_skew_composition(const Cocycle& phi, std::size_t n_trials,
                                           std::uint64_t seed, double tol = 1e-12);

/// Draws a time admissible for the cocycle, in [0, ~span).
double sample_time(const Cocycle& phi, RandomStream& rng, double span = 8.0);

}  // namespace ergoperiod::rds
