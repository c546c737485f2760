#pragma once

// Measure-preserving noise systems (Omega, F, P, theta_t): the base flows
// every cocycle in this library runs over.
//
// Infinite objects (symbol sequences, Brownian paths) are represented by a
// 64-bit key plus an offset: value number i of the path is a pure function
// of (key, offset + i), so shifting only moves the offset and the group law
// theta_t o theta_s = theta_{t+s} holds bit-for-bit. The cached window is the
// part of the path observables look at.

#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "ergoperiod/random.hpp"

namespace ergoperiod::noise {

inline const double kDefaultAlpha = std::numbers::sqrt2 - 1.0;

struct IrrationalRotation {
  double alpha = kDefaultAlpha;
};

/// theta_t(r, x) = ((r + t) mod 1, (x + t alpha) mod 1).
struct Torus2 {
  double alpha = kDefaultAlpha;
};

/// i.i.d. symbols in {0..symbol_count-1}; `weights` empty means uniform.
struct BernoulliShift {
  int symbol_count = 2;
  int window = 8;
  std::vector<double> weights;
};

/// Brownian increments of variance `mesh` on [0, horizon].
struct WienerGrid {
  double mesh = 0.01;
  double horizon = 1.0;
};

using NoiseKind = std::variant<IrrationalRotation, Torus2, BernoulliShift, WienerGrid>;

struct DiscreteTime {
  double step = 1.0;
};
struct ContinuousTime {};
using TimeDomain = std::variant<DiscreteTime, ContinuousTime>;

struct RotationPoint {
  double x = 0.0;
  bool operator==(const RotationPoint&) const = default;
};

struct TorusPoint {
  double r = 0.0;
  double x = 0.0;
  bool operator==(const TorusPoint&) const = default;
};

struct SymbolSequence {
  std::uint64_t key = 0;
  std::uint64_t offset = 0;
  std::vector<int> symbols;  // symbols[i] is the symbol at time i
  bool operator==(const SymbolSequence&) const = default;
};

struct IncrementPath {
  std::uint64_t key = 0;
  std::uint64_t offset = 0;
  std::vector<double> increments;  // W((i+1)h) - W(ih)
  bool operator==(const IncrementPath&) const = default;
};

using NoiseState = std::variant<RotationPoint, TorusPoint, SymbolSequence, IncrementPath>;

class NoiseSystem {
 public:
  NoiseSystem(NoiseKind kind, TimeDomain time);

  /// Defaults: rotations tick in unit steps, the torus flows in continuous
  /// time, Bernoulli shifts step by 1 and Wiener grids step by the mesh.
  static NoiseSystem rotation(double alpha = kDefaultAlpha);
  static NoiseSystem torus(double alpha = kDefaultAlpha);
  static NoiseSystem bernoulli(int symbol_count, int window, std::vector<double> weights = {});
  static NoiseSystem wiener(double mesh, double horizon);

  const NoiseKind& kind() const { return kind_; }
  const TimeDomain& time_domain() const { return time_; }
  /// Rotations are invertible; symbol and Brownian shifts are one-sided.
  bool two_sided() const;
  /// Set when a rotation number lies within 1e-12 of p/q with q <= 1000,
  /// i.e. the system is a non-ergodic control rather than a genuine
  /// irrational rotation.
  bool near_rational() const { return near_rational_; }
  /// Smallest admissible time increment, 0 for continuous time.
  double time_step() const;
  std::string name() const;

  /// Number of grid steps in t; throws NonCommensurateTime off the grid.
  std::int64_t steps(double t) const;

 private:
  NoiseKind kind_;
  TimeDomain time_;
  bool near_rational_ = false;
};

/// theta_t omega.
NoiseState shift(const NoiseSystem& sys, double t, const NoiseState& omega);
NoiseState sample_invariant(const NoiseSystem& sys, RandomStream& rng);

/// Modular distance for rotations, max-norm for increments, 0/1 for
/// symbol sequences.
double state_distance(const NoiseSystem& sys, const NoiseState& a, const NoiseState& b);

/// Symbol at time i >= 0, generated lazily past the cached window.
int symbol_at(const NoiseSystem& sys, const SymbolSequence& seq, std::uint64_t i);
/// Increment i >= 0, generated lazily past the cached window.
double increment_at(const NoiseSystem& sys, const IncrementPath& path, std::uint64_t i);
/// W(t) for t on the mesh, t <= horizon.
double wiener_value(const NoiseSystem& sys, const IncrementPath& path, double t);

/// Convenience accessors; throw InvalidArgument on the wrong alternative.
double rotation_coordinate(const NoiseState& omega);  // x of a rotation or torus point
const TorusPoint& torus_point(const NoiseState& omega);

using Observable = std::function<double(const NoiseState&)>;

struct NamedObservable {
  std::string name;
  Observable fn;
};

struct PreservationReport {
  double mean_raw = 0.0;
  double mean_shifted = 0.0;
  double z_score = 0.0;
  std::size_t n = 0;
  bool passed(double z_max = 4.0) const;
};

/// Paired test of E[phi] = E[phi o theta_t] over n invariant samples; the
/// z-score uses the standard error of the paired difference.
PreservationReport check_preservation(const NoiseSystem& sys, double t, const Observable& phi,
                                      std::size_t n, std::uint64_t seed, unsigned workers = 1);

/// The fixed five-observable battery used for preservation checks on each
/// system family.
std::vector<NamedObservable> standard_battery(const NoiseSystem& sys);

/// Largest group-law defect dist(theta_t theta_s omega, theta_{t+s} omega)
/// over random (t, s, omega); also checks theta_0 = id.
double group_law_defect(const NoiseSystem& sys, std::size_t trials, std::uint64_t seed);

double wrap01(double x);
double circle_distance(double a, double b);

}  // namespace ergoperiod::noise
