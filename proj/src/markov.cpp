#include "ergoperiod/markov.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ergoperiod/error.hpp"
#include "ergoperiod/parallel.hpp"
#include "ergoperiod/stats.hpp"

namespace ergoperiod::markov {
namespace {

constexpr std::size_t kMaskChunk = std::size_t{1} << 14;
constexpr std::uint64_t kShiftedSeedMix = 0x9E3779B97F4A7C15ull;

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

bool is_invariant_set(const StochasticMatrix& q, Mask support, Mask gamma, double atol) {
  const std::size_t n = q.size();
  for (std::size_t x = 0; x < n; ++x) {
    if (!(support >> x & 1u)) continue;
    double inside = 0.0;
    const auto row = q.row(x);
    for (std::size_t y = 0; y < n; ++y)
      if (gamma >> y & 1u) inside += row[y];
    const double indicator = (gamma >> x & 1u) ? 1.0 : 0.0;
    if (std::abs(inside - indicator) > atol) return false;
  }
  return true;
}

std::vector<Mask> brute_force_sets(const StochasticMatrix& q, Mask support, double atol, unsigned workers) {
  const std::size_t total = std::size_t{1} << q.size();
  const std::size_t chunks = (total + kMaskChunk - 1) / kMaskChunk;
  auto partials = map_tasks(chunks, workers, [&](std::size_t c) {
    std::vector<Mask> found;
    const std::size_t end = std::min(total, (c + 1) * kMaskChunk);
    for (std::size_t m = c * kMaskChunk; m < end; ++m)
      if (is_invariant_set(q, support, m, atol)) found.push_back(m);
    return found;
  });
  std::vector<Mask> out;
  for (auto& part : partials) out.insert(out.end(), part.begin(), part.end());
  return out;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

// Every support state must share membership with each of its P^tau
// successors; states linked that way form blocks that enter Gamma together,
// and all other states are free.
std::vector<Mask> structural_sets(const StochasticMatrix& q, Mask support, double atol) {
  const std::size_t n = q.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t x = 0; x < n; ++x) {
    if (!(support >> x & 1u)) continue;
    for (std::size_t y = 0; y < n; ++y)
      if (q(x, y) > atol) parent[find_root(parent, x)] = find_root(parent, y);
  }
  std::vector<Mask> blocks;
  std::vector<int> block_of(n, -1);
  for (std::size_t x = 0; x < n; ++x) {
    const std::size_t r = find_root(parent, x);
    if (block_of[r] < 0) {
      block_of[r] = static_cast<int>(blocks.size());
      blocks.push_back(0);
    }
    blocks[static_cast<std::size_t>(block_of[r])] |= Mask{1} << x;
  }
  std::vector<Mask> out;
  out.reserve(std::size_t{1} << blocks.size());
  for (std::size_t choice = 0; choice < (std::size_t{1} << blocks.size()); ++choice) {
    Mask m = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b)
      if (choice >> b & 1u) m |= blocks[b];
    out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool one_step_invariant(const StochasticMatrix& p, Mask support, Mask gamma, double atol) {
  return is_invariant_set(p, support, gamma, atol);
}

std::vector<bool> structural_sections(const StochasticMatrix& p, int tau, const DiscretePeriodicMeasure& pm,
                                      double atol) {
  const StochasticMatrix q = p.power(tau);
  const auto classes = communicating_classes(q);
  std::vector<int> class_of(q.size(), -1);
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (int x : classes[c]) class_of[static_cast<std::size_t>(x)] = static_cast<int>(c);
  std::vector<bool> verdicts;
  for (const auto& rho : pm.rho) {
    const Mask support = support_mask(rho, atol);
    if (support == 0) {
      verdicts.push_back(false);
      continue;
    }
    const auto& cls = classes[static_cast<std::size_t>(class_of[static_cast<std::size_t>(std::countr_zero(support))])];
    Mask class_mask = 0;
    for (int x : cls) class_mask |= Mask{1} << x;
    if ((support & ~class_mask) != 0 || !is_closed_class(q, cls)) {
      verdicts.push_back(false);
      continue;
    }
    verdicts.push_back(max_abs_diff(rho, class_stationary(q, cls)) <= 1e-9);
  }
  return verdicts;
}

void check_size(const StochasticMatrix& p, int n_max) {
  if (static_cast<int>(p.size()) > n_max || p.size() > 62) {
    std::ostringstream msg;
    msg << "n=" << p.size() << " exceeds the subset-enumeration limit " << std::min(n_max, 62);
    fail(ErrorCode::StateSpaceTooLarge, msg.str());
  }
}

}  // namespace

DiscretePeriodicMeasure DiscretePeriodicMeasure::from_initial(const StochasticMatrix& p, int tau,
                                                              std::vector<double> rho0) {
  require(tau >= 1, "period must be >= 1");
  require(rho0.size() == p.size(), "initial vector does not match the matrix");
  DiscretePeriodicMeasure pm;
  pm.tau = tau;
  pm.rho.push_back(std::move(rho0));
  for (int k = 1; k < tau; ++k) pm.rho.push_back(p.push(pm.rho.back()));
  pm.validate(p);
  return pm;
}

void DiscretePeriodicMeasure::validate(const StochasticMatrix& p, double tol) const {
  require(tau >= 1 && static_cast<int>(rho.size()) == tau, "periodic measure needs tau vectors");
  for (const auto& r : rho) {
    require(r.size() == p.size(), "periodic measure vector does not match the matrix");
    double total = 0.0;
    for (double w : r) {
      require(std::isfinite(w) && w >= -tol, "periodic measure weights must be nonnegative");
      total += w;
    }
    require(std::abs(total - 1.0) <= tol, "periodic measure vectors must sum to 1");
  }
  for (int k = 0; k < tau; ++k) {
    const auto pushed = p.push(rho[static_cast<std::size_t>(k)]);
    const double defect = max_abs_diff(pushed, rho[static_cast<std::size_t>((k + 1) % tau)]);
    if (defect > tol) {
      std::ostringstream msg;
      msg << "rho_" << k << " P differs from rho_" << (k + 1) % tau << " by " << defect;
      fail(ErrorCode::NotInvariant, msg.str());
    }
  }
}

std::vector<std::vector<int>> communicating_classes(const StochasticMatrix& p, double atol) {
  const std::size_t n = p.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (std::size_t y = 0; y < n; ++y) {
        if (p(x, y) > atol && !reach[s][y]) {
          reach[s][y] = true;
          stack.push_back(y);
        }
      }
    }
  }
  std::vector<std::vector<int>> classes;
  std::vector<bool> assigned(n, false);
  for (std::size_t x = 0; x < n; ++x) {
    if (assigned[x]) continue;
    std::vector<int> cls;
    for (std::size_t y = x; y < n; ++y) {
      if (!assigned[y] && reach[x][y] && reach[y][x]) {
        assigned[y] = true;
        cls.push_back(static_cast<int>(y));
      }
    }
    classes.push_back(std::move(cls));
  }
  return classes;
}

bool is_closed_class(const StochasticMatrix& p, std::span<const int> cls, double atol) {
  std::vector<bool> member(p.size(), false);
  for (int x : cls) member[static_cast<std::size_t>(x)] = true;
  for (int x : cls)
    for (std::size_t y = 0; y < p.size(); ++y)
      if (!member[y] && p(static_cast<std::size_t>(x), y) > atol) return false;
  return true;
}

std::vector<double> class_stationary(const StochasticMatrix& p, std::span<const int> cls) {
  const auto m = static_cast<Eigen::Index>(cls.size());
  require(m >= 1, "empty class");
  // Solve pi (P_C - I) = 0 with one balance equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      a(i, j) = p(static_cast<std::size_t>(cls[static_cast<std::size_t>(j)]),
                  static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])) -
                (i == j ? 1.0 : 0.0);
  a.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) fail(ErrorCode::NumericalDegeneracy, "stationary system of a closed class is singular");
  const Eigen::VectorXd pi = lu.solve(b);
  std::vector<double> out(p.size(), 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = std::max(0.0, pi(i));
    out[static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])] = v;
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<DiscretePeriodicMeasure> find_periodic_measures(const StochasticMatrix& p, int tau) {
  require(tau >= 1, "period must be >= 1");
  require(p.size() >= 1, "empty matrix");
  const StochasticMatrix q = p.power(tau);
  const auto classes = communicating_classes(q);
  std::vector<const std::vector<int>*> closed;
  for (const auto& cls : classes)
    if (is_closed_class(q, cls)) closed.push_back(&cls);

  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = q(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) - (i == j ? 1.0 : 0.0);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-9);
  const auto nullity = static_cast<std::size_t>(n - lu.rank());
  if (nullity != closed.size()) {
    std::ostringstream msg;
    msg << "fixed space of P^" << tau << " has dimension " << nullity << " but there are " << closed.size()
        << " closed classes";
    fail(ErrorCode::NumericalDegeneracy, msg.str());
  }

  std::vector<DiscretePeriodicMeasure> out;
  for (const auto* cls : closed) out.push_back(DiscretePeriodicMeasure::from_initial(p, tau, class_stationary(q, *cls)));
  return out;
}

InvariantSetFamily enumerate_invariant_sets(const StochasticMatrix& p, int tau, std::span<const double> rho_s,
                                            double atol, EnumerationMethod method, int n_max, unsigned workers) {
  require(tau >= 1, "period must be >= 1");
  require(rho_s.size() == p.size(), "measure does not match the matrix");
  require(atol >= 0.0, "atol must be >= 0");
  check_size(p, n_max);
  const StochasticMatrix q = p.power(tau);
  InvariantSetFamily family;
  family.support = support_mask(rho_s, atol);
  if (method == EnumerationMethod::Auto)
    method = p.size() <= 12 ? EnumerationMethod::BruteForce : EnumerationMethod::Structural;
  family.subsets = method == EnumerationMethod::BruteForce ? brute_force_sets(q, family.support, atol, workers)
                                                           : structural_sets(q, family.support, atol);
  return family;
}

bool PSErgodicityVerdict::ergodic() const {
  return std::all_of(sections.begin(), sections.end(), [](const SectionVerdict& v) { return v.ergodic; });
}

PSErgodicityVerdict is_ps_ergodic(const StochasticMatrix& p, int tau, const DiscretePeriodicMeasure& pm,
                                  double atol, EnumerationMethod method) {
  require(pm.tau == tau, "periodic measure has a different period");
  pm.validate(p);
  PSErgodicityVerdict verdict;
  for (int s = 0; s < tau; ++s) {
    const auto& rho = pm.rho[static_cast<std::size_t>(s)];
    auto family = enumerate_invariant_sets(p, tau, rho, atol, method);
    SectionVerdict section;
    section.s = s;
    section.invariant_sets = family.subsets.size();
    std::optional<Mask> preferred, fallback;
    for (Mask gamma : family.subsets) {
      const double m = mass(rho, gamma);
      if (m <= atol || m >= 1.0 - atol) continue;
      if (!fallback) fallback = gamma;
      if (!preferred && one_step_invariant(p, family.support, gamma, atol)) preferred = gamma;
    }
    if (fallback) {
      section.ergodic = false;
      section.witness = preferred ? preferred : fallback;
      section.witness_mass = mass(rho, *section.witness);
    }
    verdict.sections.push_back(section);
  }
  return verdict;
}

bool structural_ps_ergodic(const StochasticMatrix& p, int tau, const DiscretePeriodicMeasure& pm, double atol) {
  require(pm.tau == tau, "periodic measure has a different period");
  check_size(p, kDefaultMaxStates);
  const auto v = structural_sections(p, tau, pm, atol);
  return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
}

bool cross_check_ps(const StochasticMatrix& p, int tau, const DiscretePeriodicMeasure& pm, double atol) {
  check_size(p, kDefaultMaxStates);
  const auto enumerated = is_ps_ergodic(p, tau, pm, atol, EnumerationMethod::BruteForce);
  const auto structural = structural_sections(p, tau, pm, atol);
  for (std::size_t s = 0; s < structural.size(); ++s)
    if (enumerated.sections[s].ergodic != structural[s]) return false;
  return true;
}

ConditionAReport check_condition_A(const rds::RandomPeriodicPath& y, int s, const InvariantSetFamily& family,
                                   std::size_t n_paths, int window, std::uint64_t seed, unsigned workers) {
  require(window >= 2, "Condition A window must be >= 2");
  require(n_paths >= 1, "Condition A needs at least one path");
  require(s >= 0, "section time must be >= 0");
  const auto* fm = y.cocycle().finite_rule();
  require(fm != nullptr, "Condition A is checked on finite chains");
  const auto& gammas = family.subsets;
  const auto& noise = y.cocycle().noise();

  auto partials = map_tasks(chunk_count(n_paths), workers, [&](std::size_t chunk) {
    std::vector<GammaTally> tallies(gammas.size());
    const std::size_t end = std::min(n_paths, (chunk + 1) * kSampleChunk);
    for (std::size_t i = chunk * kSampleChunk; i < end; ++i) {
      RandomStream rng(seed, i);
      const auto omega = noise::sample_invariant(noise, rng);
      const auto trace = rds::trace_set(y, s, omega, 0, window - 1);
      Mask visited = 0;
      for (double x : trace.points) visited |= Mask{1} << static_cast<int>(x);
      for (std::size_t g = 0; g < gammas.size(); ++g) {
        if ((visited & ~gammas[g]) == 0) ++tallies[g].inside;
        else if ((visited & gammas[g]) == 0) ++tallies[g].outside;
        else ++tallies[g].partial;
      }
    }
    return tallies;
  });

  ConditionAReport report;
  report.n_paths = n_paths;
  report.window = window;
  report.tallies.resize(gammas.size());
  for (std::size_t g = 0; g < gammas.size(); ++g) report.tallies[g].gamma = gammas[g];
  for (const auto& part : partials) {
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      report.tallies[g].inside += part[g].inside;
      report.tallies[g].outside += part[g].outside;
      report.tallies[g].partial += part[g].partial;
    }
  }
  for (const auto& t : report.tallies) {
    report.violations += t.partial;
    if (!t.same_side()) ++report.strengthened_violations;
  }
  return report;
}

std::vector<double> semigroup_apply(const StochasticMatrix& p, int k, std::span<const double> phi) {
  require(k >= 0, "semigroup time must be >= 0");
  require(phi.size() == p.size(), "function does not match the matrix");
  std::vector<double> out(phi.begin(), phi.end());
  for (int i = 0; i < k; ++i) out = p.apply(out);
  return out;
}

namespace {

void check_times(std::span<const int> times) {
  require(!times.empty(), "time list must be nonempty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0, "times must be nonnegative");
    if (i > 0) require(times[i] > times[i - 1], "times must be strictly increasing");
  }
}

void check_law(const StochasticMatrix& p, std::span<const double> rho) {
  require(rho.size() == p.size(), "law does not match the matrix");
  double total = 0.0;
  for (double w : rho) {
    require(w >= 0.0, "law must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-10, "law must sum to 1");
}

}  // namespace

std::vector<std::vector<int>> sample_canonical(const StochasticMatrix& p, std::span<const double> rho,
                                               std::span<const int> times, std::size_t n_paths,
                                               std::uint64_t seed, unsigned workers) {
  check_times(times);
  check_law(p, rho);
  std::vector<StochasticMatrix> kernels;
  for (std::size_t i = 1; i < times.size(); ++i) kernels.push_back(p.power(times[i] - times[i - 1]));
  auto chunks = map_tasks(chunk_count(n_paths), workers, [&](std::size_t chunk) {
    std::vector<std::vector<int>> out;
    const std::size_t end = std::min(n_paths, (chunk + 1) * kSampleChunk);
    for (std::size_t i = chunk * kSampleChunk; i < end; ++i) {
      RandomStream rng(seed, i);
      std::vector<int> tuple;
      tuple.reserve(times.size());
      tuple.push_back(static_cast<int>(rng.categorical(rho)));
      for (const auto& kernel : kernels)
        tuple.push_back(static_cast<int>(rng.categorical(kernel.row(static_cast<std::size_t>(tuple.back())))));
      out.push_back(std::move(tuple));
    }
    return out;
  });
  std::vector<std::vector<int>> all;
  all.reserve(n_paths);
  for (auto& c : chunks)
    for (auto& t : c) all.push_back(std::move(t));
  return all;
}

double canonical_expectation(const StochasticMatrix& p, std::span<const double> rho, std::span<const int> times,
                             const std::function<double(std::span<const int>)>& phi) {
  check_times(times);
  check_law(p, rho);
  std::vector<StochasticMatrix> kernels;
  for (std::size_t i = 1; i < times.size(); ++i) kernels.push_back(p.power(times[i] - times[i - 1]));
  const std::size_t n = p.size();
  const std::size_t m = times.size();
  std::vector<int> tuple(m, 0);
  double total = 0.0;
  for (;;) {
    double w = rho[static_cast<std::size_t>(tuple[0])];
    for (std::size_t i = 1; i < m && w != 0.0; ++i)
      w *= kernels[i - 1](static_cast<std::size_t>(tuple[i - 1]), static_cast<std::size_t>(tuple[i]));
    if (w != 0.0) total += w * phi(tuple);
    std::size_t pos = m;
    while (pos > 0) {
      --pos;
      if (++tuple[pos] < static_cast<int>(n)) break;
      tuple[pos] = 0;
      if (pos == 0) return total;
    }
  }
}

bool ShiftInvarianceReport::passed(double z_max) const { return std::abs(z_score) <= z_max; }

ShiftInvarianceReport check_shift_invariance_canonical(const StochasticMatrix& p, std::span<const double> rho,
                                                       std::span<const int> times,
                                                       const std::function<double(std::span<const int>)>& phi,
                                                       int k, std::size_t n, std::uint64_t seed,
                                                       unsigned workers) {
  require(k >= 0, "shift must be >= 0");
  require(n >= 2, "shift check needs at least two paths");
  check_times(times);
  check_law(p, rho);
  const auto pushed = p.power(k).push(rho);
  if (max_abs_diff(pushed, rho) > 1e-10) fail(ErrorCode::NotInvariant, "rho P^k differs from rho");

  auto run = [&](int shift, std::uint64_t s) {
    std::vector<int> grid;
    const bool prefix = times.front() + shift > 0;
    if (prefix) grid.push_back(0);
    for (int t : times) grid.push_back(t + shift);
    const auto paths = sample_canonical(p, rho, grid, n, s, workers);
    stats::RunningStats acc;
    for (const auto& path : paths) acc.add(phi(std::span<const int>(path).subspan(prefix ? 1 : 0)));
    return acc;
  };
  const auto base = run(0, seed);
  const auto shifted = run(k, seed ^ kShiftedSeedMix);
  ShiftInvarianceReport report;
  report.n = n;
  report.mean_base = base.mean();
  report.mean_shifted = shifted.mean();
  report.z_score = stats::two_sample_z(base.mean(), base.variance(), n, shifted.mean(), shifted.variance(), n);
  return report;
}

Mask support_mask(std::span<const double> rho, double atol) {
  Mask m = 0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (rho[i] > atol) m |= Mask{1} << i;
  return m;
}

double mass(std::span<const double> rho, Mask gamma) {
  double total = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (gamma >> i & 1u) total += rho[i];
  return total;
}

std::vector<int> mask_labels(Mask gamma) {
  std::vector<int> labels;
  for (int i = 0; i < 64; ++i)
    if (gamma >> i & 1u) labels.push_back(i + 1);
  return labels;
}

Mask mask_from_labels(std::span<const int> labels) {
  Mask m = 0;
  for (int l : labels) {
    require(l >= 1 && l <= 64, "state labels are 1-based and at most 64");
    m |= Mask{1} << (l - 1);
  }
  return m;
}

}  // namespace ergoperiod::markov
