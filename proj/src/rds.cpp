#include "ergoperiod/rds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ergoperiod/error.hpp"

namespace ergoperiod::rds {
namespace {

constexpr std::uint64_t kStartTag = 0x5354u;

std::int64_t mesh_steps(double t, double mesh) {
  const double q = t / mesh;
  const double k = std::round(q);
  if (std::abs(q - k) > 1e-9 * std::max(1.0, std::abs(q))) {
    std::ostringstream msg;
    msg << "t=" << t << " is not a multiple of the cocycle mesh " << mesh;
    fail(ErrorCode::NonCommensurateTime, msg.str());
  }
  return static_cast<std::int64_t>(k);
}

int start_state(const ChainPath& path, const NoiseState& omega) {
  const auto& law = path.start_law;
  const auto mass = std::find_if(law.begin(), law.end(), [](double w) { return w > 0.0; });
  const bool point_mass = mass != law.end() && *mass == 1.0;
  if (point_mass) return static_cast<int>(mass - law.begin());
  const auto& seq = std::get<noise::SymbolSequence>(omega);
  return static_cast<int>(categorical_from_uniform(law, keyed_uniform(seq.key, kStartTag, seq.offset)));
}

}  // namespace

CircleShift sine_forcing(double amplitude, double velocity) {
  CircleShift rule;
  rule.velocity = velocity;
  if (amplitude == 0.0) {
    rule.forcing = [](const NoiseState&) { return 0.0; };
    rule.forcing_name = "0";
  } else {
    rule.forcing = [amplitude](const NoiseState& omega) {
      return amplitude * std::sin(2.0 * std::numbers::pi * noise::rotation_coordinate(omega));
    };
    std::ostringstream name;
    name << amplitude << "*sin(2 pi x)";
    rule.forcing_name = name.str();
  }
  return rule;
}

RandomMapping random_mapping(const markov::StochasticMatrix& p) {
  const std::size_t n = p.size();
  std::vector<std::vector<double>> cdf(n, std::vector<double>(n));
  std::vector<double> breaks{0.0, 1.0};
  for (std::size_t x = 0; x < n; ++x) {
    double acc = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      acc += p(x, y);
      cdf[x][y] = acc;
      if (y + 1 < n && acc > 0.0 && acc < 1.0) breaks.push_back(acc);
    }
    cdf[x][n - 1] = 1.0;
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-15; }),
               breaks.end());

  RandomMapping out;
  out.map.n = static_cast<int>(n);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double width = breaks[k + 1] - breaks[k];
    if (width <= 1e-15) continue;
    const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
    std::vector<int> image(n);
    for (std::size_t x = 0; x < n; ++x) {
      const auto it = std::upper_bound(cdf[x].begin(), cdf[x].end(), mid);
      image[x] = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf[x].begin(), n - 1));
    }
    out.map.maps.push_back(std::move(image));
    out.weights.push_back(width);
  }
  double total = 0.0;
  for (double w : out.weights) total += w;
  for (double& w : out.weights) w /= total;
  return out;
}

Cocycle::Cocycle(NoiseSystem noise, CircleShift rule, double mesh)
    : noise_(std::move(noise)), rule_(std::move(rule)), mesh_(mesh) {
  require(mesh_ >= 0.0, "cocycle mesh must be nonnegative");
  require(static_cast<bool>(std::get<CircleShift>(rule_).forcing), "circle shift needs a forcing function");
  require(std::holds_alternative<noise::IrrationalRotation>(noise_.kind()) ||
              std::holds_alternative<noise::Torus2>(noise_.kind()),
          "circle-shift cocycles run over rotation or torus noise");
}

Cocycle::Cocycle(NoiseSystem noise, FiniteMap rule) : noise_(std::move(noise)), rule_(std::move(rule)) {
  const auto* bern = std::get_if<noise::BernoulliShift>(&noise_.kind());
  require(bern != nullptr, "finite-map cocycles run over Bernoulli noise");
  const auto& fm = std::get<FiniteMap>(rule_);
  require(fm.n >= 1, "finite map needs at least one state");
  require(static_cast<int>(fm.maps.size()) == bern->symbol_count,
          "finite map needs one map per noise symbol");
  for (const auto& m : fm.maps) {
    require(static_cast<int>(m.size()) == fm.n, "each symbol map must cover every state");
    for (int y : m) require(y >= 0 && y < fm.n, "symbol map image outside the state space");
  }
}

Cocycle Cocycle::circle_shift(NoiseSystem noise, double amplitude, double velocity, double mesh) {
  return Cocycle(std::move(noise), sine_forcing(amplitude, velocity), mesh);
}

Cocycle Cocycle::finite_map(FiniteMap rule, std::vector<double> weights, int window) {
  const int symbols = static_cast<int>(rule.maps.size());
  return Cocycle(NoiseSystem::bernoulli(symbols, window, std::move(weights)), std::move(rule));
}

Cocycle Cocycle::from_matrix(const markov::StochasticMatrix& p, int window) {
  RandomMapping rm = random_mapping(p);
  return finite_map(std::move(rm.map), std::move(rm.weights), window);
}

PhaseSpace Cocycle::phase_space() const {
  if (const auto* fm = finite_rule()) return FiniteSet{fm->n};
  return Circle{};
}

void Cocycle::check_time(double t) const {
  require(std::isfinite(t) && t >= 0.0, "cocycle time must be >= 0");
  if (noise_.time_step() > 0.0) (void)noise_.steps(t);
  if (mesh_ > 0.0) (void)mesh_steps(t, mesh_);
}

PhasePoint Cocycle::apply(double t, const NoiseState& omega, PhasePoint x) const {
  check_time(t);
  if (const auto* cs = circle_rule()) {
    if (t == 0.0) return x;
    const NoiseState moved = noise::shift(noise_, t, omega);
    return noise::wrap01(x + cs->velocity * t + cs->forcing(moved) - cs->forcing(omega));
  }
  const auto& fm = std::get<FiniteMap>(rule_);
  const auto& seq = std::get<noise::SymbolSequence>(omega);
  const std::int64_t k = noise_.steps(t);
  int state = static_cast<int>(x);
  require(state >= 0 && state < fm.n && static_cast<double>(state) == x, "phase point is not a state");
  for (std::int64_t i = 0; i < k; ++i) {
    state = fm.maps[static_cast<std::size_t>(noise::symbol_at(noise_, seq, static_cast<std::uint64_t>(i)))]
                   [static_cast<std::size_t>(state)];
  }
  return static_cast<PhasePoint>(state);
}

double Cocycle::phase_distance(PhasePoint a, PhasePoint b) const {
  if (finite()) return std::abs(a - b);
  return noise::circle_distance(a, b);
}

PhasePoint Cocycle::sample_phase(RandomStream& rng) const {
  if (const auto* fm = finite_rule()) return static_cast<double>(rng.below(static_cast<std::uint64_t>(fm->n)));
  return rng.uniform();
}

std::string Cocycle::name() const {
  std::ostringstream out;
  if (const auto* cs = circle_rule()) {
    out << "circle-shift(v=" << cs->velocity << ", f=" << cs->forcing_name << ") over " << noise_.name();
  } else {
    out << "finite-map(n=" << finite_rule()->n << ", symbols=" << finite_rule()->maps.size() << ")";
  }
  return out.str();
}

RandomPeriodicPath::RandomPeriodicPath(Cocycle cocycle, double period,
                                       std::variant<CirclePath, ChainPath, CustomPath> rule)
    : cocycle_(std::move(cocycle)), period_(period), rule_(std::move(rule)) {
  require(std::isfinite(period_) && period_ > 0.0, "period must be positive");
  if (std::holds_alternative<CirclePath>(rule_)) {
    require(cocycle_.circle_rule() != nullptr, "circle path needs a circle-shift cocycle");
  }
  if (const auto* chain = std::get_if<ChainPath>(&rule_)) {
    const auto* fm = cocycle_.finite_rule();
    require(fm != nullptr, "chain path needs a finite-map cocycle");
    require(static_cast<int>(chain->start_law.size()) == fm->n, "start law must cover every state");
    double total = 0.0;
    for (double w : chain->start_law) {
      require(w >= 0.0, "start law must be nonnegative");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-9, "start law must sum to 1");
    require(period_ == std::round(period_), "finite-chain periods are integers");
  }
  if (const auto* custom = std::get_if<CustomPath>(&rule_)) {
    require(static_cast<bool>(custom->eval), "custom path needs an evaluator");
  }
}

RandomPeriodicPath RandomPeriodicPath::circle(Cocycle cocycle, double offset, double declared_period) {
  const auto* cs = cocycle.circle_rule();
  require(cs != nullptr, "circle path needs a circle-shift cocycle");
  const double period = cs->velocity != 0.0 ? 1.0 / std::abs(cs->velocity) : declared_period;
  return RandomPeriodicPath(std::move(cocycle), period, CirclePath{offset});
}

RandomPeriodicPath RandomPeriodicPath::chain(Cocycle cocycle, int period, int start) {
  const auto* fm = cocycle.finite_rule();
  require(fm != nullptr, "chain path needs a finite-map cocycle");
  require(start >= 0 && start < fm->n, "start state outside the state space");
  std::vector<double> law(static_cast<std::size_t>(fm->n), 0.0);
  law[static_cast<std::size_t>(start)] = 1.0;
  return RandomPeriodicPath(std::move(cocycle), period, ChainPath{std::move(law)});
}

RandomPeriodicPath RandomPeriodicPath::chain(Cocycle cocycle, int period, std::vector<double> start_law) {
  return RandomPeriodicPath(std::move(cocycle), period, ChainPath{std::move(start_law)});
}

PhasePoint RandomPeriodicPath::eval(double s, const NoiseState& omega) const {
  if (const auto* cp = std::get_if<CirclePath>(&rule_)) {
    const auto* cs = cocycle_.circle_rule();
    const NoiseState moved = noise::shift(cocycle_.noise(), s, omega);
    return noise::wrap01(cp->offset + cs->velocity * s + cs->forcing(moved));
  }
  if (const auto* chain = std::get_if<ChainPath>(&rule_)) {
    require(s >= 0.0, "chain paths are defined for s >= 0 only");
    return cocycle_.apply(s, omega, static_cast<double>(start_state(*chain, omega)));
  }
  return std::get<CustomPath>(rule_).eval(s, omega);
}

PhasePoint RandomPeriodicPath::at_section(double s, const NoiseState& omega) const {
  if (const auto* cp = std::get_if<CirclePath>(&rule_)) {
    const auto* cs = cocycle_.circle_rule();
    if (cocycle_.noise().time_step() > 0.0) (void)cocycle_.noise().steps(s);
    return noise::wrap01(cp->offset + cs->velocity * s + cs->forcing(omega));
  }
  if (const auto* custom = std::get_if<CustomPath>(&rule_)) {
    if (custom->at_section) return custom->at_section(s, omega);
  }
  return eval(s, omega);
}

SkewState skew_step(const Cocycle& phi, double t, const SkewState& state) {
  return {noise::shift(phi.noise(), t, state.omega), phi.apply(t, state.omega, state.x)};
}

TraceSet trace_set(const RandomPeriodicPath& y, double s, const NoiseState& omega, int k_min, int k_max) {
  require(k_min <= k_max, "trace window needs k_min <= k_max");
  if (!y.cocycle().noise().two_sided()) {
    require(k_min >= 0 && s >= 0.0, "one-sided noise: trace window must start at k >= 0");
  }
  TraceSet trace{s, k_min, k_max, {}};
  trace.points.reserve(static_cast<std::size_t>(k_max - k_min + 1));
  for (int k = k_min; k <= k_max; ++k) trace.points.push_back(y.eval(s + k * y.period(), omega));
  return trace;
}

double sample_time(const Cocycle& phi, RandomStream& rng, double span) {
  double step = phi.noise().time_step();
  if (phi.mesh() > 0.0) step = std::max(step, phi.mesh());
  if (step > 0.0) {
    const auto count = static_cast<std::uint64_t>(std::floor(span / step));
    return static_cast<double>(rng.below(count + 1)) * step;
  }
  return span * rng.uniform();
}

VerificationReport verify_cocycle(const Cocycle& phi, std::size_t n_trials, std::uint64_t seed, double tol) {
  require(n_trials >= 1, "verify_cocycle needs at least one trial");
  VerificationReport report{0.0, n_trials, tol};
  for (std::size_t i = 0; i < n_trials; ++i) {
    RandomStream rng(seed, i);
    const NoiseState omega = noise::sample_invariant(phi.noise(), rng);
    const PhasePoint x = phi.sample_phase(rng);
    const double t = sample_time(phi, rng);
    const double s = sample_time(phi, rng);
    const PhasePoint direct = phi.apply(t + s, omega, x);
    const PhasePoint composed = phi.apply(t, noise::shift(phi.noise(), s, omega), phi.apply(s, omega, x));
    report.max_defect = std::max(report.max_defect, phi.phase_distance(direct, composed));
    report.max_defect = std::max(report.max_defect, phi.phase_distance(phi.apply(0.0, omega, x), x));
  }
  return report;
}

VerificationReport verify_rpp(const RandomPeriodicPath& y, std::size_t n_trials, std::uint64_t seed, double tol) {
  require(n_trials >= 1, "verify_rpp needs at least one trial");
  const Cocycle& phi = y.cocycle();
  VerificationReport report{0.0, n_trials, tol};
  for (std::size_t i = 0; i < n_trials; ++i) {
    RandomStream rng(seed, i);
    const NoiseState omega = noise::sample_invariant(phi.noise(), rng);
    const double t = sample_time(phi, rng);
    const double s = sample_time(phi, rng);
    const NoiseState shifted = noise::shift(phi.noise(), s, omega);
    const double flow = phi.phase_distance(phi.apply(t, shifted, y.eval(s, omega)), y.eval(t + s, omega));
    const NoiseState by_period = noise::shift(phi.noise(), y.period(), omega);
    const double periodic = phi.phase_distance(y.eval(s + y.period(), omega), y.eval(s, by_period));
    report.max_defect = std::max({report.max_defect, flow, periodic});
  }
  return report;
}

VerificationReport verify_skew_composition(const Cocycle& phi, std::size_t n_trials, std::uint64_t seed,
                                           double tol) {
  VerificationReport report{0.0, n_trials, tol};
  for (std::size_t i = 0; i < n_trials; ++i) {
    RandomStream rng(seed, i);
    SkewState state{noise::sample_invariant(phi.noise(), rng), 0.0};
    state.x = phi.sample_phase(rng);
    const double t = sample_time(phi, rng);
    const double s = sample_time(phi, rng);
    const SkewState two = skew_step(phi, t, skew_step(phi, s, state));
    const SkewState one = skew_step(phi, t + s, state);
    report.max_defect = std::max({report.max_defect, noise::state_distance(phi.noise(), two.omega, one.omega),
                                  phi.phase_distance(two.x, one.x)});
  }
  return report;
}

}  // namespace ergoperiod::rds
