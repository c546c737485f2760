#pragma once

// Finite-state Markov semigroups P_t = P^t: periodic measures, invariant
// sets of the tau-mesh kernel on the Poincare section, PS-ergodicity,
// Condition A and the canonical process.
//
// States are 0-based internally. Subsets are bitmasks with bit i standing
// for state i (label i+1 in reports).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ergoperiod/rds.hpp"
#include "ergoperiod/stochastic_matrix.hpp"

namespace ergoperiod::markov {

using Mask = std::uint64_t;

inline constexpr int kDefaultMaxStates = 20;
inline constexpr double kDefaultAtol = 1e-12;

/// rho_0, ..., rho_{tau-1} with rho_k P = rho_{k+1 mod tau}.
struct DiscretePeriodicMeasure {
  int tau = 1;
  std::vector<std::vector<double>> rho;

  /// Builds rho_k = rho_0 P^k and validates the cycle closes.
  static DiscretePeriodicMeasure from_initial(const StochasticMatrix& p, int tau, std::vector<double> rho0);
  /// Throws NotInvariant when rho_{tau-1} P misses rho_0 (or any step is off)
  /// by more than tol.
  void validate(const StochasticMatrix& p, double tol = 1e-10) const;
};

struct InvariantSetFamily {
  int s = 0;
  std::vector<Mask> subsets;  // sorted ascending
  Mask support = 0;
};

enum class EnumerationMethod { BruteForce, Structural, Auto };

/// Communicating classes (strongly connected components of the positive
/// entries), each sorted; classes are ordered by smallest member.
std::vector<std::vector<int>> communicating_classes(const StochasticMatrix& p, double atol = 0.0);
bool is_closed_class(const StochasticMatrix& p, std::span<const int> cls, double atol = 0.0);
/// Unique stationary vector of P restricted to a closed class, by direct solve.
std::vector<double> class_stationary(const StochasticMatrix& p, std::span<const int> cls);

/// One extremal periodic measure per closed class of P^tau.
std::vector<DiscretePeriodicMeasure> find_periodic_measures(const StochasticMatrix& p, int tau);

/// All Gamma with |(P^tau 1_Gamma)(x) - 1_Gamma(x)| <= atol wherever rho_s(x) > atol.
InvariantSetFamily enumerate_invariant_sets(const StochasticMatrix& p, int tau, std::span<const double> rho_s,
                                            double atol = kDefaultAtol,
                                            EnumerationMethod method = EnumerationMethod::Auto,
                                            int n_max = kDefaultMaxStates, unsigned workers = 1);

struct SectionVerdict {
  int s = 0;
  bool ergodic = true;
  std::optional<Mask> witness;
  double witness_mass = 0.0;
  std::size_t invariant_sets = 0;
};

struct PSErgodicityVerdict {
  std::vector<SectionVerdict> sections;
  bool ergodic() const;
};

/// Witnesses prefer sets that are also one-step invariant on the support
/// (unions of P-orbits, the natural "component" sets), then the smallest mask.
PSErgodicityVerdict is_ps_ergodic(const StochasticMatrix& p, int tau, const DiscretePeriodicMeasure& pm,
                                  double atol = kDefaultAtol,
                                  EnumerationMethod method = EnumerationMethod::Auto);

/// Class-structure decision: rho_s is ergodic for P^tau iff its support lies
/// in one closed class of P^tau and it equals that class's stationary vector.
bool structural_ps_ergodic(const StochasticMatrix& p, int tau, const DiscretePeriodicMeasure& pm,
                           double atol = kDefaultAtol);

/// True when the subset-enumeration verdict and the class-structure verdict agree.
bool cross_check_ps(const StochasticMatrix& p, int tau, const DiscretePeriodicMeasure& pm,
                    double atol = kDefaultAtol);

struct GammaTally {
  Mask gamma = 0;
  std::size_t inside = 0;
  std::size_t outside = 0;
  std::size_t partial = 0;
  bool same_side() const { return partial == 0 && (inside == 0 || outside == 0); }
};

struct ConditionAReport {
  std::size_t n_paths = 0;
  int window = 0;
  std::size_t violations = 0;             // (omega, Gamma) pairs with a split trace
  std::size_t strengthened_violations = 0;  // Gammas not on one side for all omega
  std::vector<GammaTally> tallies;
};

/// Samples omega, builds the trace Y(s + k tau, omega), k = 0..K-1, and
/// classifies it against every Gamma in the family.
ConditionAReport check_condition_A(const rds::RandomPeriodicPath& y, int s, const InvariantSetFamily& family,
                                   std::size_t n_paths, int window, std::uint64_t seed, unsigned workers = 1);

/// P^k phi.
std::vector<double> semigroup_apply(const StochasticMatrix& p, int k, std::span<const double> phi);

/// Tuples (x_1..x_n) with x_1 ~ rho and x_{i+1} ~ P^{t_{i+1}-t_i}(x_i, .).
/// Path i uses stream (seed, i).
std::vector<std::vector<int>> sample_canonical(const StochasticMatrix& p, std::span<const double> rho,
                                               std::span<const int> times, std::size_t n_paths,
                                               std::uint64_t seed, unsigned workers = 1);

/// Exact E[phi(x_{t_1}, ..., x_{t_n})] with x_{t_1} ~ rho, by summation over
/// all state tuples.
double canonical_expectation(const StochasticMatrix& p, std::span<const double> rho, std::span<const int> times,
                             const std::function<double(std::span<const int>)>& phi);

struct ShiftInvarianceReport {
  double mean_base = 0.0;
  double mean_shifted = 0.0;
  double z_score = 0.0;
  std::size_t n = 0;
  bool passed(double z_max = 4.0) const;
};

/// Compares E[phi(X_{t_1..t_m})] with E[phi(X_{t_1+k..t_m+k})] for the chain
/// started from X_0 ~ rho. Requires rho P^k = rho within 1e-10.
ShiftInvarianceReport check_shift_invariance_canonical(const StochasticMatrix& p, std::span<const double> rho,
                                                       std::span<const int> times,
                                                       const std::function<double(std::span<const int>)>& phi,
                                                       int k, std::size_t n, std::uint64_t seed,
                                                       unsigned workers = 1);

/// Support {x : rho(x) > atol} as a mask.
Mask support_mask(std::span<const double> rho, double atol = kDefaultAtol);
/// rho(Gamma).
double mass(std::span<const double> rho, Mask gamma);
/// 1-based labels of the states in a mask.
std::vector<int> mask_labels(Mask gamma);
Mask mask_from_labels(std::span<const int> labels);

}  // namespace ergoperiod::markov
