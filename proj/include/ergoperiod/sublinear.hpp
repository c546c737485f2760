#pragma once

// Upper expectations E[phi] = max_s E_{rho_s}[phi] over a grid of a periodic
// family, capacities, sublinear ergodicity on finite systems, the
// quasi-sure Birkhoff harness and the canonical sublinear expectation.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergoperiod/markov.hpp"
#include "ergoperiod/measures.hpp"
#include "ergoperiod/rds.hpp"

namespace ergoperiod::sublinear {

using markov::Mask;

class UpperExpectation {
 public:
  UpperExpectation(double tau, std::vector<double> s_grid, std::vector<std::vector<double>> family);

  static UpperExpectation from_periodic(const markov::DiscretePeriodicMeasure& pm);
  static UpperExpectation from_family(const measures::PeriodicMeasureFamily& family);

  double tau() const { return tau_; }
  const std::vector<double>& s_grid() const { return s_grid_; }
  const std::vector<std::vector<double>>& family() const { return family_; }
  std::size_t dimension() const { return family_.front().size(); }
  /// Edges when built from an interval partition, used to resolve sets.
  const std::optional<measures::Partition>& partition() const { return partition_; }

 private:
  double tau_;
  std::vector<double> s_grid_;
  std::vector<std::vector<double>> family_;
  std::optional<measures::Partition> partition_;
};

/// max over the family of E_{rho_s}[phi].
double upper_expect(const UpperExpectation& ue, std::span<const double> phi);
/// Index of the family member attaining the max (first on ties).
std::size_t upper_expect_argmax(const UpperExpectation& ue, std::span<const double> phi);

/// V(A) for A given as a mask over states or bins.
double capacity(const UpperExpectation& ue, Mask a);
/// V([lo, hi)) for an interval partition; the endpoints must be bin edges.
double capacity(const UpperExpectation& ue, double lo, double hi);

struct InvarianceReport {
  double max_defect = 0.0;   // exact
  double max_abs_z = 0.0;    // empirical
  std::vector<double> per_observable;
  bool exact = true;
  bool passed(double tol_or_z) const { return (exact ? max_defect : max_abs_z) <= tol_or_z; }
};

/// max over phi of |T[P^k phi] - T[phi]| for a family on the integer grid.
InvarianceReport check_sublinear_invariance(const markov::StochasticMatrix& p, const UpperExpectation& ue,
                                            const std::vector<std::vector<double>>& battery, int k);

using JointObservable = std::function<double(const noise::NoiseState&, rds::PhasePoint)>;

struct NamedJointObservable {
  std::string name;
  JointObservable fn;
};

/// Circle-family battery of five observables of (omega, x).
std::vector<NamedJointObservable> joint_battery();

/// For every grid point s_i and observable, compares E_{mu_{s_i}}[phi o Theta_t]
/// with E_{mu_{s_i + t}}[phi] (two independent sample sets of size n), and the
/// two grid maxima. t must be a multiple of the grid spacing tau/m, otherwise
/// GridIncommensurate. Needs two-sided noise so that (omega, Y(s, theta_{-s} omega))
/// is a genuine mu_s sample.
InvarianceReport check_sublinear_invariance(const rds::RandomPeriodicPath& y, std::size_t m, double t,
                                            const std::vector<NamedJointObservable>& battery, std::size_t n,
                                            std::uint64_t seed, unsigned workers = 1);

/// Deterministic map on a finite set with a finite family of measures.
struct FiniteMapSystem {
  std::vector<int> map;
  std::vector<std::vector<double>> family;
};

/// Sets B with map^{-1}(B) = B: unions of components of the functional graph.
/// n_max bounds the number of components, not points.
std::vector<Mask> map_invariant_sets(std::span<const int> map, int n_max = markov::kDefaultMaxStates);
bool is_map_invariant(std::span<const int> map, Mask b);

struct SetVerdict {
  Mask set = 0;  // candidate index for interval systems
  bool invariant = true;
  double capacity = 0.0;
  double complement_capacity = 0.0;
  bool passed = false;
  std::string status;  // "ok", "non-ergodic" or "NotInvariant"
};

struct ErgodicityVerdict {
  std::vector<SetVerdict> sets;
  bool ergodic() const;
};

/// Every candidate is first checked for invariance; non-invariant candidates
/// are reported with status NotInvariant and fail. An invariant B passes iff
/// V(B) <= atol or V(B^c) <= atol. Without candidates all invariant sets are
/// enumerated.
ErgodicityVerdict sublinear_ergodic_check(const FiniteMapSystem& system, std::optional<std::vector<Mask>> candidates,
                                          double atol = markov::kDefaultAtol);

/// Finite union of half-open intervals [a, b).
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<std::pair<double, double>> pieces);
  static IntervalSet interval(double a, double b) { return IntervalSet({{a, b}}); }

  const std::vector<std::pair<double, double>>& pieces() const { return pieces_; }
  double length() const;
  IntervalSet intersect(double a, double b) const;
  IntervalSet translate(double d) const;
  IntervalSet unite(const IntervalSet& other) const;
  IntervalSet complement_in(double a, double b) const;
  bool approx_equal(const IntervalSet& other, double tol = 1e-12) const;

 private:
  std::vector<std::pair<double, double>> pieces_;  // sorted, disjoint, nonempty
};

/// Omega = [0, 2) carrying two Lebesgue measures, P1 on [0,1) and P2 on [1,2),
/// with theta(x) = ((x + alpha) mod 1) + 1 on [0,1) and x - 1 on [1,2).
class TwoIntervalSystem {
 public:
  explicit TwoIntervalSystem(double alpha);

  double alpha() const { return alpha_; }
  double step(double x) const;
  IntervalSet preimage(const IntervalSet& b) const;
  bool is_invariant(const IntervalSet& b, double tol = 1e-12) const;

  double p1(const IntervalSet& a) const;
  double p2(const IntervalSet& a) const;
  /// E = E_{P1} v E_{P2} on indicators.
  double capacity(const IntervalSet& a) const;
  /// Upper expectation of a function integrated by midpoint quadrature with
  /// `cells` cells per unit interval.
  double upper_expect(const std::function<double(double)>& x, int cells = 4096) const;

  ErgodicityVerdict ergodic_check(const std::vector<IntervalSet>& candidates, double atol = markov::kDefaultAtol) const;

 private:
  double alpha_;
};

/// Two n-point circles with rotation p/q: point i < n maps to
/// n + (i + n p / q) mod n, point i >= n maps to i - n. Measures: uniform
/// on each circle. n must be a multiple of q.
FiniteMapSystem two_interval_surrogate(int n, int p, int q);

struct QSReport {
  std::vector<double> horizons;                 // T values
  std::vector<double> s_grid;
  std::vector<std::vector<double>> fractions;   // [T][s] deviant fraction
  std::vector<double> max_fraction;             // per T
  std::vector<std::vector<double>> mean_average;  // [T][s] mean time average
  double target = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t n_paths = 0;
  bool nonincreasing() const;
};

struct QSOptions {
  std::vector<double> horizons;  // each a multiple of delta
  double delta = 1.0;
  std::size_t n_paths = 64;
  std::size_t m = 16;
  double epsilon = 0.05;
  std::optional<double> target;  // default: grid average of E_{mu_s}[xi]
  std::size_t target_samples = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// For each grid point s, starts n_paths orbits at (omega, Y(s, theta_{-s} omega)),
/// accumulates (delta / T) sum_k xi(Theta_{k delta}) for every horizon along
/// the same orbit, and records the fraction of orbits farther than epsilon
/// from the target.
QSReport birkhoff_qs_lln(const rds::RandomPeriodicPath& y, const JointObservable& xi, const QSOptions& options);

/// Grid average (1/m) sum_s E_{mu_s}[xi] by Monte Carlo.
double family_average(const rds::RandomPeriodicPath& y, const JointObservable& xi, std::size_t m, std::size_t n,
                      std::uint64_t seed, unsigned workers = 1);

/// Backward recursion phi_{j-1}(x_1..x_{j-1}) = (P^{t_j - t_{j-1}} phi_j(x_1..x_{j-1}, .))(x_{j-1}),
/// then T[phi_1].
double canonical_sublinear_expect(const markov::StochasticMatrix& p, const UpperExpectation& ue,
                                  std::span<const int> times,
                                  const std::function<double(std::span<const int>)>& phi);

}  // namespace ergoperiod::sublinear
