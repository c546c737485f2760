#include "ergoperiod/measures.hpp"

#include <algorithm>
#include <cmath>

#include "ergoperiod/error.hpp"
#include "ergoperiod/parallel.hpp"
#include "ergoperiod/stats.hpp"

namespace ergoperiod::measures {

Partition Partition::atoms(std::size_t n) {
  require(n >= 1, "atom partition needs at least one state");
  Partition p;
  p.kind_ = Kind::Atoms;
  p.atoms_ = n;
  return p;
}

Partition Partition::uniform(double lo, double hi, std::size_t bins) {
  require(bins >= 1 && hi > lo, "uniform partition needs bins >= 1 and hi > lo");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  edges.back() = hi;
  return intervals(std::move(edges));
}

Partition Partition::intervals(std::vector<double> edges) {
  require(edges.size() >= 2, "interval partition needs at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    require(edges[i] > edges[i - 1], "partition edges must be strictly increasing");
  Partition p;
  p.kind_ = Kind::Intervals;
  p.edges_ = std::move(edges);
  return p;
}

std::size_t Partition::size() const { return kind_ == Kind::Atoms ? atoms_ : edges_.size() - 1; }

std::size_t Partition::bin_of(double x) const {
  if (kind_ == Kind::Atoms) {
    require(x >= 0.0 && x < static_cast<double>(atoms_) && x == std::floor(x), "point is not a state");
    return static_cast<std::size_t>(x);
  }
  require(x >= edges_.front() && x < edges_.back(), "point outside the partition range");
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

double Partition::center(std::size_t i) const {
  if (kind_ == Kind::Atoms) return static_cast<double>(i + 1);
  return 0.5 * (edges_[i] + edges_[i + 1]);
}

double Partition::lower() const { return kind_ == Kind::Atoms ? 0.0 : edges_.front(); }
double Partition::upper() const {
  return kind_ == Kind::Atoms ? static_cast<double>(atoms_) : edges_.back();
}

EmpiricalMeasure EmpiricalMeasure::exact(Partition partition, std::vector<double> weights) {
  EmpiricalMeasure m{std::move(partition), std::move(weights), 0};
  m.validate();
  return m;
}

EmpiricalMeasure EmpiricalMeasure::from_counts(Partition partition, const std::vector<std::size_t>& counts) {
  require(counts.size() == partition.size(), "count vector does not match the partition");
  std::size_t total = 0;
  for (auto c : counts) total += c;
  require(total > 0, "histogram with no samples");
  EmpiricalMeasure m{std::move(partition), {}, total};
  m.weights.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    m.weights[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return m;
}

double EmpiricalMeasure::expectation(const std::vector<double>& phi) const {
  if (phi.size() != weights.size()) fail(ErrorCode::PartitionMismatch, "observable does not match the partition");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * phi[i];
  return acc;
}

void EmpiricalMeasure::validate() const {
  require(weights.size() == partition.size(), "weights do not match the partition");
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "measure weights must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "measure weights must sum to 1");
}

void PeriodicMeasureFamily::validate() const {
  require(tau > 0.0, "family period must be positive");
  require(!measures.empty() && measures.size() == s_grid.size(), "family needs one measure per grid point");
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    require(s_grid[i] >= 0.0 && s_grid[i] < tau, "grid points must lie in [0, tau)");
    if (i > 0) require(s_grid[i] > s_grid[i - 1], "family grid must be strictly increasing");
    measures[i].validate();
    if (!(measures[i].partition == measures.front().partition))
      fail(ErrorCode::PartitionMismatch, "family members use different partitions");
  }
}

std::vector<double> uniform_grid(double tau, std::size_t m) {
  require(tau > 0.0 && m >= 1, "grid needs tau > 0 and m >= 1");
  std::vector<double> grid(m);
  for (std::size_t i = 0; i < m; ++i) grid[i] = tau * static_cast<double>(i) / static_cast<double>(m);
  return grid;
}

namespace {

template <class Draw>
std::vector<std::size_t> histogram(std::size_t n, const Partition& partition, std::uint64_t seed,
                                   std::uint64_t stream_base, unsigned workers, const Draw& draw) {
  auto partials = map_tasks(chunk_count(n), workers, [&](std::size_t chunk) {
    std::vector<std::size_t> counts(partition.size(), 0);
    const std::size_t begin = chunk * kSampleChunk;
    const std::size_t end = std::min(n, begin + kSampleChunk);
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream rng(seed, stream_base + i);
      ++counts[partition.bin_of(draw(rng))];
    }
    return counts;
  });
  std::vector<std::size_t> counts(partition.size(), 0);
  for (const auto& c : partials)
    for (std::size_t b = 0; b < c.size(); ++b) counts[b] += c[b];
  return counts;
}

// Keeps the sample streams of different grid points disjoint.
constexpr std::uint64_t kGridStride = 1ull << 40;

void check_partition_fits(const rds::RandomPeriodicPath& y, const Partition& partition) {
  if (y.cocycle().finite()) {
    require(partition.kind() == Partition::Kind::Atoms &&
                static_cast<int>(partition.size()) == y.cocycle().finite_rule()->n,
            "finite chains use an atom partition over all states");
  } else {
    require(partition.kind() == Partition::Kind::Intervals && partition.lower() == 0.0 &&
                partition.upper() == 1.0,
            "circle phases use an interval partition of [0,1)");
  }
}

}  // namespace

EmpiricalMeasure estimate_rho(const rds::RandomPeriodicPath& y, double s, std::size_t n,
                              const Partition& partition, std::uint64_t seed, unsigned workers) {
  require(n >= 100, "estimate_rho needs n >= 100");
  check_partition_fits(y, partition);
  const auto& noise = y.cocycle().noise();
  const auto counts = histogram(n, partition, seed, 0, workers, [&](RandomStream& rng) {
    return y.eval(s, noise::sample_invariant(noise, rng));
  });
  return EmpiricalMeasure::from_counts(partition, counts);
}

EmpiricalMeasure estimate_section_marginal(
    const rds::RandomPeriodicPath& y, double s, std::size_t n, const Partition& partition,
    const std::function<double(const noise::NoiseState&, rds::PhasePoint)>& g, std::uint64_t seed,
    unsigned workers) {
  require(n >= 100, "estimate_section_marginal needs n >= 100");
  const auto& noise = y.cocycle().noise();
  const auto counts = histogram(n, partition, seed, 0, workers, [&](RandomStream& rng) {
    const auto omega = noise::sample_invariant(noise, rng);
    return g(omega, y.at_section(s, omega));
  });
  return EmpiricalMeasure::from_counts(partition, counts);
}

PeriodicMeasureFamily estimate_family(const rds::RandomPeriodicPath& y, std::size_t m, std::size_t n,
                                      const Partition& partition, std::uint64_t seed, unsigned workers) {
  require(n >= 100, "estimate_family needs n >= 100");
  check_partition_fits(y, partition);
  PeriodicMeasureFamily family;
  family.tau = y.period();
  family.s_grid = uniform_grid(y.period(), m);
  family.kind = FamilyKind::Empirical;
  const auto& noise = y.cocycle().noise();
  for (std::size_t i = 0; i < m; ++i) {
    const double s = family.s_grid[i];
    const auto counts = histogram(n, partition, seed, i * kGridStride, workers, [&](RandomStream& rng) {
      return y.at_section(s, noise::sample_invariant(noise, rng));
    });
    family.measures.push_back(EmpiricalMeasure::from_counts(partition, counts));
  }
  return family;
}

EmpiricalMeasure average_measure(const PeriodicMeasureFamily& family) {
  require(!family.measures.empty(), "average of an empty family");
  const Partition& partition = family.measures.front().partition;
  std::vector<double> weights(partition.size(), 0.0);
  std::size_t samples = 0;
  bool exact = true;
  for (const auto& m : family.measures) {
    if (!(m.partition == partition)) fail(ErrorCode::PartitionMismatch, "family members use different partitions");
    for (std::size_t b = 0; b < weights.size(); ++b) weights[b] += m.weights[b];
    samples += m.n_samples;
    exact = exact && m.exact_vector();
  }
  const double count = static_cast<double>(family.measures.size());
  for (double& w : weights) w /= count;
  return EmpiricalMeasure{partition, std::move(weights), exact ? 0 : samples};
}

PeriodicityReport check_family_periodicity(const markov::StochasticMatrix& p,
                                           const PeriodicMeasureFamily& family) {
  require(family.kind == FamilyKind::ExactVector, "exact periodicity check needs an exact family");
  const std::size_t m = family.measures.size();
  require(m >= 1, "empty family");
  const double spacing = family.tau / static_cast<double>(m);
  const int step = static_cast<int>(std::lround(spacing));
  require(std::abs(spacing - step) <= 1e-12 && step >= 1, "finite-chain family grid must have integer spacing");
  const auto kernel = p.power(step);
  PeriodicityReport report;
  report.exact = true;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& current = family.measures[i];
    const auto& next = family.measures[(i + 1) % m];
    if (current.weights.size() != p.size() || !(current.partition == next.partition))
      fail(ErrorCode::PartitionMismatch, "family does not live on the chain's state space");
    const auto pushed = kernel.push(current.weights);
    double defect = 0.0;
    for (std::size_t j = 0; j < pushed.size(); ++j) defect = std::max(defect, std::abs(pushed[j] - next.weights[j]));
    report.per_step.push_back(defect);
    report.max_defect = std::max(report.max_defect, defect);
  }
  return report;
}

PeriodicityReport check_family_periodicity(const rds::RandomPeriodicPath& y,
                                           const PeriodicMeasureFamily& family, std::size_t n,
                                           std::uint64_t seed, unsigned workers) {
  require(family.kind == FamilyKind::Empirical, "z-test periodicity check needs an empirical family");
  family.validate();
  const std::size_t m = family.measures.size();
  const double spacing = family.tau / static_cast<double>(m);
  const Partition& partition = family.measures.front().partition;
  check_partition_fits(y, partition);
  const auto& phi = y.cocycle();
  PeriodicityReport report;
  report.exact = false;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = family.s_grid[i];
    const auto counts = histogram(n, partition, seed, i * kGridStride, workers, [&](RandomStream& rng) {
      const auto omega = noise::sample_invariant(phi.noise(), rng);
      return phi.apply(spacing, omega, y.at_section(s, omega));
    });
    const auto pushed = EmpiricalMeasure::from_counts(partition, counts);
    const auto& target = family.measures[(i + 1) % m];
    double worst = 0.0;
    for (std::size_t b = 0; b < partition.size(); ++b) {
      worst = std::max(worst, std::abs(stats::proportion_z(pushed.weights[b], pushed.n_samples,
                                                           target.weights[b], target.n_samples)));
    }
    report.per_step.push_back(worst);
    report.max_abs_z = std::max(report.max_abs_z, worst);
  }
  return report;
}

}  // namespace ergoperiod::measures
