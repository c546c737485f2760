#pragma once

// Finite surrogates for measures on the phase space: histograms over circle
// bins or exact vectors over the atoms of a finite chain, and periodic
// families s -> rho_s on a uniform grid of [0, tau).

#include <cstdint>
#include <functional>
#include <vector>

#include "ergoperiod/rds.hpp"
#include "ergoperiod/stochastic_matrix.hpp"

namespace ergoperiod::measures {

class Partition {
 public:
  enum class Kind { Atoms, Intervals };

  static Partition atoms(std::size_t n);
  /// `bins` equal intervals of [lo, hi).
  static Partition uniform(double lo, double hi, std::size_t bins);
  static Partition circle(std::size_t bins) { return uniform(0.0, 1.0, bins); }
  static Partition intervals(std::vector<double> edges);

  Kind kind() const { return kind_; }
  std::size_t size() const;
  const std::vector<double>& edges() const { return edges_; }
  /// Bin containing x (atoms: x is the state index).
  std::size_t bin_of(double x) const;
  /// Interval midpoint, or the 1-based state label for atoms.
  double center(std::size_t i) const;
  double lower() const;
  double upper() const;

  bool operator==(const Partition&) const = default;

 private:
  Kind kind_ = Kind::Atoms;
  std::size_t atoms_ = 0;
  std::vector<double> edges_;
};

/// Weights over a partition. n_samples == 0 marks an exact vector.
struct EmpiricalMeasure {
  Partition partition;
  std::vector<double> weights;
  std::size_t n_samples = 0;

  static EmpiricalMeasure exact(Partition partition, std::vector<double> weights);
  static EmpiricalMeasure from_counts(Partition partition, const std::vector<std::size_t>& counts);

  bool exact_vector() const { return n_samples == 0; }
  double expectation(const std::vector<double>& phi) const;
  void validate() const;
};

enum class FamilyKind { ExactVector, Empirical };

struct PeriodicMeasureFamily {
  double tau = 1.0;
  std::vector<double> s_grid;
  std::vector<EmpiricalMeasure> measures;
  FamilyKind kind = FamilyKind::Empirical;

  void validate() const;
};

/// m equally spaced points 0, tau/m, ..., (m-1) tau/m.
std::vector<double> uniform_grid(double tau, std::size_t m);

/// Histogram of Y(s, omega_i) over n i.i.d. noise samples.
EmpiricalMeasure estimate_rho(const rds::RandomPeriodicPath& y, double s, std::size_t n,
                              const Partition& partition, std::uint64_t seed, unsigned workers = 1);

/// Histogram of g(omega, Y(s, theta_{-s} omega)) for omega ~ P, i.e. the law
/// of g under mu_s. Used to look at marginals of mu_s other than the phase.
EmpiricalMeasure estimate_section_marginal(
    const rds::RandomPeriodicPath& y, double s, std::size_t n, const Partition& partition,
    const std::function<double(const noise::NoiseState&, rds::PhasePoint)>& g, std::uint64_t seed,
    unsigned workers = 1);

/// Empirical rho_s on the m-point grid; grid point i uses seed stream block i.
PeriodicMeasureFamily estimate_family(const rds::RandomPeriodicPath& y, std::size_t m, std::size_t n,
                                      const Partition& partition, std::uint64_t seed, unsigned workers = 1);

/// Left-endpoint quadrature of (1/tau) int_0^tau rho_s ds on the family grid.
EmpiricalMeasure average_measure(const PeriodicMeasureFamily& family);

struct PeriodicityReport {
  double max_defect = 0.0;  // exact families
  double max_abs_z = 0.0;   // empirical families
  std::vector<double> per_step;  // defect or max |z| for each grid transition
  bool exact = true;
  bool passed(double tol_or_z) const { return (exact ? max_defect : max_abs_z) <= tol_or_z; }
};

/// Exact check of rho_{s_i} P^{delta} = rho_{s_{i+1}} (cyclically) for a
/// family of vectors on an integer grid.
PeriodicityReport check_family_periodicity(const markov::StochasticMatrix& p,
                                           const PeriodicMeasureFamily& family);

/// Empirical check: n fresh mu_{s_i}-samples are pushed by the skew product
/// over one grid spacing and their phase histogram is compared bin-wise with
/// rho_{s_{i+1}} by a two-proportion z-test.
PeriodicityReport check_family_periodicity(const rds::RandomPeriodicPath& y,
                                           const PeriodicMeasureFamily& family, std::size_t n,
                                           std::uint64_t seed, unsigned workers = 1);

}  // namespace ergoperiod::measures
