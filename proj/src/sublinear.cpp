#include "ergoperiod/sublinear.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ergoperiod/error.hpp"
#include "ergoperiod/parallel.hpp"
#include "ergoperiod/stats.hpp"

namespace ergoperiod::sublinear {
namespace {

constexpr std::uint64_t kTargetSeedMix = 0xD1B54A32D192ED03ull;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::int64_t grid_ratio(double t, double spacing, ErrorCode code, const char* what) {
  const double q = t / spacing;
  const double k = std::round(q);
  if (std::abs(q - k) > 1e-9 * std::max(1.0, std::abs(q))) {
    std::ostringstream msg;
    msg << what << " t=" << t << " is not a multiple of " << spacing;
    fail(code, msg.str());
  }
  return static_cast<std::int64_t>(k);
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

double family_capacity(const std::vector<std::vector<double>>& family, Mask b) {
  double best = 0.0;
  for (const auto& rho : family) best = std::max(best, markov::mass(rho, b));
  return best;
}

}  // namespace

UpperExpectation::UpperExpectation(double tau, std::vector<double> s_grid, std::vector<std::vector<double>> family)
    : tau_(tau), s_grid_(std::move(s_grid)), family_(std::move(family)) {
  require(tau_ > 0.0, "upper expectation needs tau > 0");
  require(!family_.empty(), "upper expectation needs a nonempty family");
  require(s_grid_.size() == family_.size(), "one grid point per family member");
  for (const auto& rho : family_) {
    if (rho.size() != family_.front().size())
      fail(ErrorCode::PartitionMismatch, "family members live on different spaces");
    double total = 0.0;
    for (double w : rho) {
      require(w >= 0.0, "family weights must be nonnegative");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-9, "family members must be probability vectors");
  }
}

UpperExpectation UpperExpectation::from_periodic(const markov::DiscretePeriodicMeasure& pm) {
  std::vector<double> grid(static_cast<std::size_t>(pm.tau));
  std::iota(grid.begin(), grid.end(), 0.0);
  return UpperExpectation(pm.tau, std::move(grid), pm.rho);
}

UpperExpectation UpperExpectation::from_family(const measures::PeriodicMeasureFamily& family) {
  family.validate();
  std::vector<std::vector<double>> weights;
  for (const auto& m : family.measures) weights.push_back(m.weights);
  UpperExpectation ue(family.tau, family.s_grid, std::move(weights));
  const auto& partition = family.measures.front().partition;
  if (partition.kind() == measures::Partition::Kind::Intervals) ue.partition_ = partition;
  return ue;
}

double upper_expect(const UpperExpectation& ue, std::span<const double> phi) {
  return dot(ue.family()[upper_expect_argmax(ue, phi)], phi);
}

std::size_t upper_expect_argmax(const UpperExpectation& ue, std::span<const double> phi) {
  if (phi.size() != ue.dimension()) fail(ErrorCode::PartitionMismatch, "observable does not match the family");
  std::size_t best = 0;
  double best_value = dot(ue.family()[0], phi);
  for (std::size_t i = 1; i < ue.family().size(); ++i) {
    const double v = dot(ue.family()[i], phi);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

double capacity(const UpperExpectation& ue, Mask a) {
  const std::size_t n = ue.dimension();
  if (n < 64 && (a >> n) != 0) fail(ErrorCode::SetNotRepresentable, "set mask has bits beyond the state space");
  if (n > 64) fail(ErrorCode::SetNotRepresentable, "masks cover at most 64 states or bins");
  return family_capacity(ue.family(), a);
}

double capacity(const UpperExpectation& ue, double lo, double hi) {
  if (!ue.partition()) fail(ErrorCode::SetNotRepresentable, "interval sets need an interval partition");
  require(lo <= hi, "interval needs lo <= hi");
  if (lo == hi) return 0.0;
  const auto& edges = ue.partition()->edges();
  auto edge_index = [&](double v) {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (std::abs(edges[i] - v) <= 1e-12) return i;
    std::ostringstream msg;
    msg << v << " is not a bin edge";
    fail(ErrorCode::SetNotRepresentable, msg.str());
  };
  const std::size_t a = edge_index(lo);
  const std::size_t b = edge_index(hi);
  Mask m = 0;
  for (std::size_t i = a; i < b; ++i) m |= Mask{1} << i;
  return capacity(ue, m);
}

InvarianceReport check_sublinear_invariance(const markov::StochasticMatrix& p, const UpperExpectation& ue,
                                            const std::vector<std::vector<double>>& battery, int k) {
  require(k >= 0, "shift must be >= 0");
  if (ue.dimension() != p.size()) fail(ErrorCode::PartitionMismatch, "family does not match the matrix");
  InvarianceReport report;
  report.exact = true;
  for (const auto& phi : battery) {
    const auto moved = markov::semigroup_apply(p, k, phi);
    const double defect = std::abs(upper_expect(ue, moved) - upper_expect(ue, phi));
    report.per_observable.push_back(defect);
    report.max_defect = std::max(report.max_defect, defect);
  }
  return report;
}

std::vector<NamedJointObservable> joint_battery() {
  using noise::NoiseState;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return {
      {"sin(2 pi x)", [](const NoiseState&, double x) { return std::sin(two_pi * x); }},
      {"cos(2 pi x)", [](const NoiseState&, double x) { return std::cos(two_pi * x); }},
      {"1{x < 1/2}", [](const NoiseState&, double x) { return x < 0.5 ? 1.0 : 0.0; }},
      {"sin(2 pi (x - u))",
       [](const NoiseState& w, double x) { return std::sin(two_pi * (x - noise::rotation_coordinate(w))); }},
      {"x u", [](const NoiseState& w, double x) { return x * noise::rotation_coordinate(w); }},
  };
}

InvarianceReport check_sublinear_invariance(const rds::RandomPeriodicPath& y, std::size_t m, double t,
                                            const std::vector<NamedJointObservable>& battery, std::size_t n,
                                            std::uint64_t seed, unsigned workers) {
  require(m >= 1 && n >= 2, "empirical invariance check needs m >= 1 and n >= 2");
  require(!battery.empty(), "empty observable battery");
  const auto& phi = y.cocycle();
  require(phi.noise().two_sided(), "joint mu_s samples need two-sided noise");
  phi.check_time(t);
  const double spacing = y.period() / static_cast<double>(m);
  const auto shift = grid_ratio(t, spacing, ErrorCode::GridIncommensurate, "shift");
  const auto grid = measures::uniform_grid(y.period(), m);

  const std::size_t b = battery.size();
  auto per_s = map_tasks(m, workers, [&](std::size_t i) {
    const std::size_t j = static_cast<std::size_t>((static_cast<std::int64_t>(i) + shift) % static_cast<std::int64_t>(m));
    std::vector<stats::RunningStats> lhs(b), rhs(b);
    for (std::size_t r = 0; r < n; ++r) {
      RandomStream a(seed, (2 * i) * n + r);
      const auto omega = noise::sample_invariant(phi.noise(), a);
      const auto moved = rds::skew_step(phi, t, {omega, y.at_section(grid[i], omega)});
      RandomStream c(seed, (2 * i + 1) * n + r);
      const auto fresh = noise::sample_invariant(phi.noise(), c);
      const double x = y.at_section(grid[j], fresh);
      for (std::size_t o = 0; o < b; ++o) {
        lhs[o].add(battery[o].fn(moved.omega, moved.x));
        rhs[o].add(battery[o].fn(fresh, x));
      }
    }
    std::vector<double> z(b);
    for (std::size_t o = 0; o < b; ++o)
      z[o] = stats::two_sample_z(lhs[o].mean(), lhs[o].variance(), n, rhs[o].mean(), rhs[o].variance(), n);
    return z;
  });

  InvarianceReport report;
  report.exact = false;
  report.per_observable.assign(b, 0.0);
  for (const auto& z : per_s)
    for (std::size_t o = 0; o < b; ++o) report.per_observable[o] = std::max(report.per_observable[o], std::abs(z[o]));
  for (double z : report.per_observable) report.max_abs_z = std::max(report.max_abs_z, z);
  return report;
}

std::vector<Mask> map_invariant_sets(std::span<const int> map, int n_max) {
  const std::size_t n = map.size();
  if (n > 62) fail(ErrorCode::StateSpaceTooLarge, "masks cover at most 62 points");
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t x = 0; x < n; ++x) {
    require(map[x] >= 0 && static_cast<std::size_t>(map[x]) < n, "map image outside the state space");
    parent[find_root(parent, x)] = find_root(parent, static_cast<std::size_t>(map[x]));
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
  if (static_cast<int>(blocks.size()) > n_max)
    fail(ErrorCode::StateSpaceTooLarge, "too many invariant components to enumerate");
  std::vector<Mask> out;
  for (std::size_t choice = 0; choice < (std::size_t{1} << blocks.size()); ++choice) {
    Mask m = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k)
      if (choice >> k & 1u) m |= blocks[k];
    out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_map_invariant(std::span<const int> map, Mask b) {
  for (std::size_t x = 0; x < map.size(); ++x)
    if (((b >> x) & 1u) != ((b >> map[x]) & 1u)) return false;
  return true;
}

bool ErgodicityVerdict::ergodic() const {
  return std::all_of(sets.begin(), sets.end(), [](const SetVerdict& v) { return v.passed; });
}

ErgodicityVerdict sublinear_ergodic_check(const FiniteMapSystem& system, std::optional<std::vector<Mask>> candidates,
                                          double atol) {
  const std::size_t n = system.map.size();
  require(n >= 1 && n <= 62, "finite system needs 1..62 points");
  require(!system.family.empty(), "finite system needs a measure family");
  for (const auto& rho : system.family)
    if (rho.size() != n) fail(ErrorCode::PartitionMismatch, "family does not match the map");
  const Mask full = (Mask{1} << n) - 1;
  const auto sets = candidates ? *candidates : map_invariant_sets(system.map);
  ErgodicityVerdict verdict;
  for (Mask b : sets) {
    SetVerdict v;
    v.set = b;
    if ((b & ~full) != 0) fail(ErrorCode::SetNotRepresentable, "candidate has bits beyond the state space");
    v.invariant = is_map_invariant(system.map, b);
    v.capacity = family_capacity(system.family, b);
    v.complement_capacity = family_capacity(system.family, full & ~b);
    if (!v.invariant) {
      v.status = to_string(ErrorCode::NotInvariant);
    } else {
      v.passed = v.capacity <= atol || v.complement_capacity <= atol;
      v.status = v.passed ? "ok" : "non-ergodic";
    }
    verdict.sets.push_back(v);
  }
  return verdict;
}

IntervalSet::IntervalSet(std::vector<std::pair<double, double>> pieces) {
  std::sort(pieces.begin(), pieces.end());
  for (const auto& [a, b] : pieces) {
    if (!(b > a)) continue;
    if (!pieces_.empty() && a <= pieces_.back().second) {
      pieces_.back().second = std::max(pieces_.back().second, b);
    } else {
      pieces_.emplace_back(a, b);
    }
  }
}

double IntervalSet::length() const {
  double total = 0.0;
  for (const auto& [a, b] : pieces_) total += b - a;
  return total;
}

IntervalSet IntervalSet::intersect(double a, double b) const {
  std::vector<std::pair<double, double>> out;
  for (const auto& [lo, hi] : pieces_) out.emplace_back(std::max(lo, a), std::min(hi, b));
  return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::translate(double d) const {
  std::vector<std::pair<double, double>> out;
  for (const auto& [a, b] : pieces_) out.emplace_back(a + d, b + d);
  return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
  auto all = pieces_;
  all.insert(all.end(), other.pieces_.begin(), other.pieces_.end());
  return IntervalSet(std::move(all));
}

IntervalSet IntervalSet::complement_in(double a, double b) const {
  std::vector<std::pair<double, double>> out;
  double cursor = a;
  for (const auto& [lo, hi] : intersect(a, b).pieces_) {
    out.emplace_back(cursor, lo);
    cursor = hi;
  }
  out.emplace_back(cursor, b);
  return IntervalSet(std::move(out));
}

bool IntervalSet::approx_equal(const IntervalSet& other, double tol) const {
  // Symmetric difference measured through |A| + |B| - 2 |A n B|.
  double common = 0.0;
  for (const auto& [a, b] : other.pieces_) common += intersect(a, b).length();
  return length() + other.length() - 2.0 * common <= tol;
}

TwoIntervalSystem::TwoIntervalSystem(double alpha) : alpha_(alpha) {
  require(alpha > 0.0 && alpha < 1.0, "rotation number must lie in (0, 1)");
}

double TwoIntervalSystem::step(double x) const {
  require(x >= 0.0 && x < 2.0, "point outside [0, 2)");
  if (x < 1.0) return noise::wrap01(x + alpha_) + 1.0;
  return x - 1.0;
}

IntervalSet TwoIntervalSystem::preimage(const IntervalSet& b) const {
  // [0,1) -> [1,2) via the rotation, then [1,2) -> [0,1) via translation.
  const IntervalSet upper = b.intersect(1.0, 2.0).translate(-1.0 - alpha_);
  const IntervalSet wrapped = upper.intersect(0.0, 1.0).unite(upper.intersect(-1.0, 0.0).translate(1.0));
  return wrapped.unite(b.intersect(0.0, 1.0).translate(1.0));
}

bool TwoIntervalSystem::is_invariant(const IntervalSet& b, double tol) const {
  return preimage(b).approx_equal(b.intersect(0.0, 2.0), tol);
}

double TwoIntervalSystem::p1(const IntervalSet& a) const { return a.intersect(0.0, 1.0).length(); }
double TwoIntervalSystem::p2(const IntervalSet& a) const { return a.intersect(1.0, 2.0).length(); }
double TwoIntervalSystem::capacity(const IntervalSet& a) const { return std::max(p1(a), p2(a)); }

double TwoIntervalSystem::upper_expect(const std::function<double(double)>& x, int cells) const {
  require(cells >= 1, "quadrature needs at least one cell");
  double e1 = 0.0, e2 = 0.0;
  for (int k = 0; k < cells; ++k) {
    const double u = (k + 0.5) / cells;
    e1 += x(u);
    e2 += x(1.0 + u);
  }
  return std::max(e1 / cells, e2 / cells);
}

ErgodicityVerdict TwoIntervalSystem::ergodic_check(const std::vector<IntervalSet>& candidates, double atol) const {
  ErgodicityVerdict verdict;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& b = candidates[i];
    SetVerdict v;
    v.set = i;
    v.invariant = is_invariant(b);
    v.capacity = capacity(b);
    v.complement_capacity = capacity(b.complement_in(0.0, 2.0));
    if (!v.invariant) {
      v.status = to_string(ErrorCode::NotInvariant);
    } else {
      v.passed = v.capacity <= atol || v.complement_capacity <= atol;
      v.status = v.passed ? "ok" : "non-ergodic";
    }
    verdict.sets.push_back(v);
  }
  return verdict;
}

FiniteMapSystem two_interval_surrogate(int n, int p, int q) {
  require(q >= 1 && p >= 0 && p < q, "rotation p/q needs 0 <= p < q");
  require(n >= 1 && n % q == 0, "circle size must be a multiple of q");
  const int shift = n / q * p;
  FiniteMapSystem system;
  system.map.resize(static_cast<std::size_t>(2 * n));
  for (int i = 0; i < n; ++i) {
    system.map[static_cast<std::size_t>(i)] = n + (i + shift) % n;
    system.map[static_cast<std::size_t>(n + i)] = i;
  }
  std::vector<double> first(static_cast<std::size_t>(2 * n), 0.0), second(static_cast<std::size_t>(2 * n), 0.0);
  for (int i = 0; i < n; ++i) {
    first[static_cast<std::size_t>(i)] = 1.0 / n;
    second[static_cast<std::size_t>(n + i)] = 1.0 / n;
  }
  system.family = {std::move(first), std::move(second)};
  return system;
}

bool QSReport::nonincreasing() const {
  for (std::size_t i = 1; i < max_fraction.size(); ++i)
    if (max_fraction[i] > max_fraction[i - 1]) return false;
  return true;
}

double family_average(const rds::RandomPeriodicPath& y, const JointObservable& xi, std::size_t m, std::size_t n,
                      std::uint64_t seed, unsigned workers) {
  require(m >= 1 && n >= 1, "family average needs m >= 1 and n >= 1");
  const auto grid = measures::uniform_grid(y.period(), m);
  const auto& noise = y.cocycle().noise();
  const std::size_t total = m * n;
  auto partials = map_tasks(chunk_count(total), workers, [&](std::size_t chunk) {
    stats::RunningStats acc;
    const std::size_t end = std::min(total, (chunk + 1) * kSampleChunk);
    for (std::size_t k = chunk * kSampleChunk; k < end; ++k) {
      RandomStream rng(seed ^ kTargetSeedMix, k);
      const auto omega = noise::sample_invariant(noise, rng);
      acc.add(xi(omega, y.at_section(grid[k / n], omega)));
    }
    return acc;
  });
  stats::RunningStats all;
  for (const auto& p : partials) all.merge(p);
  return all.mean();
}

QSReport birkhoff_qs_lln(const rds::RandomPeriodicPath& y, const JointObservable& xi, const QSOptions& options) {
  require(!options.horizons.empty(), "QS harness needs at least one horizon");
  require(options.delta > 0.0, "mesh must be positive");
  require(options.n_paths >= 1 && options.m >= 1, "QS harness needs paths and grid points");
  require(options.epsilon > 0.0, "epsilon must be positive");
  const auto& phi = y.cocycle();
  phi.check_time(options.delta);

  std::vector<double> horizons = options.horizons;
  std::sort(horizons.begin(), horizons.end());
  std::vector<std::int64_t> steps;
  for (double t : horizons) {
    require(t > 0.0, "horizons must be positive");
    steps.push_back(grid_ratio(t, options.delta, ErrorCode::NonCommensurateTime, "horizon"));
  }

  QSReport report;
  report.horizons = horizons;
  report.s_grid = measures::uniform_grid(y.period(), options.m);
  report.epsilon = options.epsilon;
  report.delta = options.delta;
  report.n_paths = options.n_paths;
  report.target = options.target ? *options.target
                                 : family_average(y, xi, options.m, options.target_samples, options.seed, options.workers);

  const std::size_t paths = options.m * options.n_paths;
  auto averages = map_tasks(paths, options.workers, [&](std::size_t task) {
    RandomStream rng(options.seed, task);
    const double s = report.s_grid[task / options.n_paths];
    const auto omega = noise::sample_invariant(phi.noise(), rng);
    rds::SkewState state{omega, y.at_section(s, omega)};
    std::vector<double> out;
    out.reserve(steps.size());
    double acc = 0.0;
    std::size_t next = 0;
    for (std::int64_t k = 0; next < steps.size(); ++k) {
      acc += xi(state.omega, state.x);
      while (next < steps.size() && k + 1 == steps[next]) {
        out.push_back(acc / static_cast<double>(steps[next]));
        ++next;
      }
      if (next < steps.size()) state = rds::skew_step(phi, options.delta, state);
    }
    return out;
  });

  for (std::size_t h = 0; h < horizons.size(); ++h) {
    std::vector<double> fractions(options.m, 0.0), means(options.m, 0.0);
    for (std::size_t task = 0; task < paths; ++task) {
      const double avg = averages[task][h];
      const std::size_t i = task / options.n_paths;
      means[i] += avg;
      if (std::abs(avg - report.target) > options.epsilon) fractions[i] += 1.0;
    }
    for (std::size_t i = 0; i < options.m; ++i) {
      fractions[i] /= static_cast<double>(options.n_paths);
      means[i] /= static_cast<double>(options.n_paths);
    }
    report.max_fraction.push_back(*std::max_element(fractions.begin(), fractions.end()));
    report.fractions.push_back(std::move(fractions));
    report.mean_average.push_back(std::move(means));
  }
  return report;
}

double canonical_sublinear_expect(const markov::StochasticMatrix& p, const UpperExpectation& ue,
                                  std::span<const int> times,
                                  const std::function<double(std::span<const int>)>& phi) {
  require(!times.empty(), "time list must be nonempty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0, "times must be nonnegative");
    if (i > 0) require(times[i] > times[i - 1], "times must be strictly increasing");
  }
  if (ue.dimension() != p.size()) fail(ErrorCode::PartitionMismatch, "family does not match the matrix");
  const std::size_t n = p.size();
  const std::size_t m = times.size();
  std::size_t size = 1;
  for (std::size_t i = 0; i < m; ++i) {
    require(size <= (std::size_t{1} << 24) / n, "tuple space too large for the recursion");
    size *= n;
  }

  std::vector<double> layer(size);
  std::vector<int> tuple(m, 0);
  for (std::size_t idx = 0; idx < size; ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = m; j-- > 0;) {
      tuple[j] = static_cast<int>(rest % n);
      rest /= n;
    }
    layer[idx] = phi(tuple);
  }
  for (std::size_t j = m; j-- > 1;) {
    const auto kernel = p.power(times[j] - times[j - 1]);
    std::vector<double> next(layer.size() / n);
    for (std::size_t prefix = 0; prefix < next.size(); ++prefix) {
      const auto row = kernel.row(prefix % n);
      double acc = 0.0;
      for (std::size_t yv = 0; yv < n; ++yv) acc += row[yv] * layer[prefix * n + yv];
      next[prefix] = acc;
    }
    layer = std::move(next);
  }
  return upper_expect(ue, layer);
}

}  // namespace ergoperiod::sublinear
