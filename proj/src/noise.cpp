#include "ergoperiod/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ergoperiod/error.hpp"
#include "ergoperiod/parallel.hpp"
#include "ergoperiod/stats.hpp"

namespace ergoperiod::noise {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Tags separating the keyed sequences drawn from one path key.
constexpr std::uint64_t kSymbolTag = 0x5359u;
constexpr std::uint64_t kIncrementTag = 0x5749u;

bool is_near_rational(double alpha) {
  // Continued-fraction convergents up to denominator 1000.
  double x = alpha;
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int i = 0; i < 40; ++i) {
    const double a = std::floor(x);
    const long long ai = static_cast<long long>(a);
    const long long p2 = ai * p1 + p0;
    const long long q2 = ai * q1 + q0;
    if (q2 > 1000) break;
    if (std::abs(alpha - static_cast<double>(p2) / static_cast<double>(q2)) < 1e-12) return true;
    p0 = p1, q0 = q1, p1 = p2, q1 = q2;
    const double frac = x - a;
    if (frac < 1e-15) return true;
    x = 1.0 / frac;
  }
  return false;
}

std::size_t window_length(const NoiseKind& kind) {
  if (const auto* b = std::get_if<BernoulliShift>(&kind)) return static_cast<std::size_t>(b->window);
  if (const auto* w = std::get_if<WienerGrid>(&kind))
    return static_cast<std::size_t>(std::llround(w->horizon / w->mesh));
  return 0;
}

int draw_symbol(const BernoulliShift& b, std::uint64_t key, std::uint64_t absolute) {
  const double u = keyed_uniform(key, kSymbolTag, absolute);
  if (b.weights.empty()) {
    return std::min(b.symbol_count - 1, static_cast<int>(u * b.symbol_count));
  }
  return static_cast<int>(categorical_from_uniform(b.weights, u));
}

double draw_increment(const WienerGrid& w, std::uint64_t key, std::uint64_t absolute) {
  return std::sqrt(w.mesh) * keyed_normal(key, kIncrementTag, absolute);
}

}  // namespace

double wrap01(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y = 0.0;
  return y;
}

double circle_distance(double a, double b) {
  const double d = wrap01(a - b);
  return std::min(d, 1.0 - d);
}

NoiseSystem::NoiseSystem(NoiseKind kind, TimeDomain time) : kind_(std::move(kind)), time_(time) {
  std::visit(Overloaded{
                 [&](const IrrationalRotation& r) {
                   require(std::isfinite(r.alpha) && r.alpha > 0.0 && r.alpha < 1.0,
                           "rotation number must lie in (0,1)");
                   near_rational_ = is_near_rational(r.alpha);
                 },
                 [&](const Torus2& r) {
                   require(std::isfinite(r.alpha) && r.alpha > 0.0,
                           "torus rotation number must be positive");
                   near_rational_ = is_near_rational(r.alpha - std::floor(r.alpha));
                 },
                 [&](const BernoulliShift& b) {
                   require(b.symbol_count >= 1, "Bernoulli shift needs at least one symbol");
                   require(b.window >= 1, "Bernoulli window must be positive");
                   if (!b.weights.empty()) {
                     require(static_cast<int>(b.weights.size()) == b.symbol_count,
                             "Bernoulli weights must have one entry per symbol");
                     double total = 0.0;
                     for (double w : b.weights) {
                       require(w >= 0.0, "Bernoulli weights must be nonnegative");
                       total += w;
                     }
                     require(std::abs(total - 1.0) <= 1e-12, "Bernoulli weights must sum to 1");
                   }
                   require(std::holds_alternative<DiscreteTime>(time_) &&
                               std::get<DiscreteTime>(time_).step == 1.0,
                           "Bernoulli shifts run in unit discrete time");
                 },
                 [&](const WienerGrid& w) {
                   require(w.mesh > 0.0 && w.horizon > 0.0, "Wiener mesh and horizon must be positive");
                   const double ratio = w.horizon / w.mesh;
                   require(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio),
                           "Wiener horizon must be an integer multiple of the mesh");
                   const auto* d = std::get_if<DiscreteTime>(&time_);
                   require(d != nullptr && std::abs(d->step - w.mesh) <= 1e-15,
                           "Wiener grids step by their mesh");
                 },
             },
             kind_);
  if (const auto* d = std::get_if<DiscreteTime>(&time_)) {
    require(d->step > 0.0, "discrete time step must be positive");
  }
}

NoiseSystem NoiseSystem::rotation(double alpha) {
  return NoiseSystem(IrrationalRotation{alpha}, DiscreteTime{1.0});
}

NoiseSystem NoiseSystem::torus(double alpha) { return NoiseSystem(Torus2{alpha}, ContinuousTime{}); }

NoiseSystem NoiseSystem::bernoulli(int symbol_count, int window, std::vector<double> weights) {
  return NoiseSystem(BernoulliShift{symbol_count, window, std::move(weights)}, DiscreteTime{1.0});
}

NoiseSystem NoiseSystem::wiener(double mesh, double horizon) {
  return NoiseSystem(WienerGrid{mesh, horizon}, DiscreteTime{mesh});
}

bool NoiseSystem::two_sided() const {
  return std::holds_alternative<IrrationalRotation>(kind_) || std::holds_alternative<Torus2>(kind_);
}

double NoiseSystem::time_step() const {
  if (const auto* d = std::get_if<DiscreteTime>(&time_)) return d->step;
  return 0.0;
}

std::string NoiseSystem::name() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const IrrationalRotation& r) { out << "rotation(alpha=" << r.alpha << ")"; },
                 [&](const Torus2& r) { out << "torus2(alpha=" << r.alpha << ")"; },
                 [&](const BernoulliShift& b) {
                   out << "bernoulli(symbols=" << b.symbol_count << ",window=" << b.window << ")";
                 },
                 [&](const WienerGrid& w) { out << "wiener(h=" << w.mesh << ",horizon=" << w.horizon << ")"; },
             },
             kind_);
  return out.str();
}

std::int64_t NoiseSystem::steps(double t) const {
  const double step = time_step();
  require(std::isfinite(t), "time must be finite");
  if (step == 0.0) fail(ErrorCode::NonCommensurateTime, "continuous-time system has no step grid");
  const double q = t / step;
  const double k = std::round(q);
  if (std::abs(q - k) > 1e-9 * std::max(1.0, std::abs(q))) {
    std::ostringstream msg;
    msg << "t=" << t << " is not a multiple of the time step " << step << " of " << name();
    fail(ErrorCode::NonCommensurateTime, msg.str());
  }
  return static_cast<std::int64_t>(k);
}

int symbol_at(const NoiseSystem& sys, const SymbolSequence& seq, std::uint64_t i) {
  const auto& b = std::get<BernoulliShift>(sys.kind());
  if (i < seq.symbols.size()) return seq.symbols[i];
  return draw_symbol(b, seq.key, seq.offset + i);
}

double increment_at(const NoiseSystem& sys, const IncrementPath& path, std::uint64_t i) {
  const auto& w = std::get<WienerGrid>(sys.kind());
  if (i < path.increments.size()) return path.increments[i];
  return draw_increment(w, path.key, path.offset + i);
}

double wiener_value(const NoiseSystem& sys, const IncrementPath& path, double t) {
  const auto& w = std::get<WienerGrid>(sys.kind());
  const std::int64_t k = sys.steps(t);
  require(k >= 0, "W(t) needs t >= 0");
  if (static_cast<std::size_t>(k) > path.increments.size()) {
    fail(ErrorCode::HorizonExceeded, "W(t) requested beyond the horizon " + std::to_string(w.horizon));
  }
  double sum = 0.0;
  for (std::int64_t i = 0; i < k; ++i) sum += path.increments[static_cast<std::size_t>(i)];
  return sum;
}

double rotation_coordinate(const NoiseState& omega) {
  if (const auto* p = std::get_if<RotationPoint>(&omega)) return p->x;
  if (const auto* p = std::get_if<TorusPoint>(&omega)) return p->x;
  fail(ErrorCode::InvalidArgument, "noise state has no rotation coordinate");
}

const TorusPoint& torus_point(const NoiseState& omega) {
  const auto* p = std::get_if<TorusPoint>(&omega);
  if (p == nullptr) fail(ErrorCode::InvalidArgument, "noise state is not a torus point");
  return *p;
}

NoiseState shift(const NoiseSystem& sys, double t, const NoiseState& omega) {
  return std::visit(
      Overloaded{
          [&](const IrrationalRotation& r) -> NoiseState {
            const auto& p = std::get<RotationPoint>(omega);
            double steps_t = t;
            if (std::holds_alternative<DiscreteTime>(sys.time_domain())) {
              steps_t = static_cast<double>(sys.steps(t)) * sys.time_step();
            }
            if (steps_t == 0.0) return p;
            return RotationPoint{wrap01(p.x + steps_t * r.alpha)};
          },
          [&](const Torus2& r) -> NoiseState {
            const auto& p = std::get<TorusPoint>(omega);
            if (std::holds_alternative<DiscreteTime>(sys.time_domain())) (void)sys.steps(t);
            if (t == 0.0) return p;
            return TorusPoint{wrap01(p.r + t), wrap01(p.x + t * r.alpha)};
          },
          [&](const BernoulliShift& b) -> NoiseState {
            const auto& seq = std::get<SymbolSequence>(omega);
            const std::int64_t k = sys.steps(t);
            require(k >= 0, "Bernoulli shift is one-sided: t must be >= 0");
            SymbolSequence out{seq.key, seq.offset + static_cast<std::uint64_t>(k), {}};
            out.symbols.resize(seq.symbols.size());
            for (std::size_t i = 0; i < out.symbols.size(); ++i) {
              const std::uint64_t src = i + static_cast<std::uint64_t>(k);
              out.symbols[i] = src < seq.symbols.size() ? seq.symbols[src]
                                                        : draw_symbol(b, seq.key, seq.offset + src);
            }
            return out;
          },
          [&](const WienerGrid& w) -> NoiseState {
            const auto& path = std::get<IncrementPath>(omega);
            const std::int64_t k = sys.steps(t);
            require(k >= 0, "Wiener shift is one-sided: t must be >= 0");
            if (static_cast<std::size_t>(k) > path.increments.size()) {
              fail(ErrorCode::HorizonExceeded, "shift by t=" + std::to_string(t) +
                                                   " exceeds the horizon " + std::to_string(w.horizon));
            }
            // Drop the first k increments and append k fresh ones; the fresh
            // ones are the path's own continuation, keyed by absolute index.
            IncrementPath out{path.key, path.offset + static_cast<std::uint64_t>(k), {}};
            out.increments.resize(path.increments.size());
            for (std::size_t i = 0; i < out.increments.size(); ++i) {
              const std::uint64_t src = i + static_cast<std::uint64_t>(k);
              out.increments[i] = src < path.increments.size()
                                      ? path.increments[src]
                                      : draw_increment(w, path.key, path.offset + src);
            }
            return out;
          },
      },
      sys.kind());
}

NoiseState sample_invariant(const NoiseSystem& sys, RandomStream& rng) {
  return std::visit(Overloaded{
                        [&](const IrrationalRotation&) -> NoiseState { return RotationPoint{rng.uniform()}; },
                        [&](const Torus2&) -> NoiseState {
                          const double r = rng.uniform();
                          return TorusPoint{r, rng.uniform()};
                        },
                        [&](const BernoulliShift& b) -> NoiseState {
                          SymbolSequence seq{rng.next_u64(), 0, {}};
                          seq.symbols.resize(window_length(sys.kind()));
                          for (std::size_t i = 0; i < seq.symbols.size(); ++i)
                            seq.symbols[i] = draw_symbol(b, seq.key, i);
                          return seq;
                        },
                        [&](const WienerGrid& w) -> NoiseState {
                          IncrementPath path{rng.next_u64(), 0, {}};
                          path.increments.resize(window_length(sys.kind()));
                          for (std::size_t i = 0; i < path.increments.size(); ++i)
                            path.increments[i] = draw_increment(w, path.key, i);
                          return path;
                        },
                    },
                    sys.kind());
}

double state_distance(const NoiseSystem&, const NoiseState& a, const NoiseState& b) {
  require(a.index() == b.index(), "noise states of different systems");
  if (const auto* p = std::get_if<RotationPoint>(&a)) {
    return circle_distance(p->x, std::get<RotationPoint>(b).x);
  }
  if (const auto* p = std::get_if<TorusPoint>(&a)) {
    const auto& q = std::get<TorusPoint>(b);
    return std::max(circle_distance(p->r, q.r), circle_distance(p->x, q.x));
  }
  if (const auto* p = std::get_if<SymbolSequence>(&a)) {
    return *p == std::get<SymbolSequence>(b) ? 0.0 : 1.0;
  }
  const auto& p = std::get<IncrementPath>(a);
  const auto& q = std::get<IncrementPath>(b);
  if (p.key != q.key || p.offset != q.offset || p.increments.size() != q.increments.size()) {
    return std::numeric_limits<double>::infinity();
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.increments.size(); ++i)
    d = std::max(d, std::abs(p.increments[i] - q.increments[i]));
  return d;
}

bool PreservationReport::passed(double z_max) const { return std::abs(z_score) <= z_max; }

PreservationReport check_preservation(const NoiseSystem& sys, double t, const Observable& phi,
                                      std::size_t n, std::uint64_t seed, unsigned workers) {
  require(n >= 100, "check_preservation needs n >= 100");
  // Validate commensurability once up front so the error is not raised from
  // inside a worker.
  if (sys.time_step() > 0.0) (void)sys.steps(t);

  struct Partial {
    stats::RunningStats raw, shifted, diff;
  };
  auto partials = map_tasks(chunk_count(n), workers, [&](std::size_t chunk) {
    Partial p;
    const std::size_t begin = chunk * kSampleChunk;
    const std::size_t end = std::min(n, begin + kSampleChunk);
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream rng(seed, i);
      const NoiseState omega = sample_invariant(sys, rng);
      const double a = phi(omega);
      const double b = phi(shift(sys, t, omega));
      p.raw.add(a);
      p.shifted.add(b);
      p.diff.add(b - a);
    }
    return p;
  });
  Partial total;
  for (const auto& p : partials) {
    total.raw.merge(p.raw);
    total.shifted.merge(p.shifted);
    total.diff.merge(p.diff);
  }
  PreservationReport report;
  report.n = n;
  report.mean_raw = total.raw.mean();
  report.mean_shifted = total.shifted.mean();
  report.z_score = stats::z_ratio(total.diff.mean(), total.diff.stderr_of_mean());
  return report;
}

std::vector<NamedObservable> standard_battery(const NoiseSystem& sys) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::visit(
      Overloaded{
          [&](const IrrationalRotation&) -> std::vector<NamedObservable> {
            auto x = [](const NoiseState& w) { return std::get<RotationPoint>(w).x; };
            return {
                {"indicator[0,0.3)(x)", [x](const NoiseState& w) { return x(w) < 0.3 ? 1.0 : 0.0; }},
                {"sin(2 pi x)", [x](const NoiseState& w) { return std::sin(two_pi * x(w)); }},
                {"cos(2 pi x)", [x](const NoiseState& w) { return std::cos(two_pi * x(w)); }},
                {"x", x},
                {"x^2", [x](const NoiseState& w) { return x(w) * x(w); }},
            };
          },
          [&](const Torus2&) -> std::vector<NamedObservable> {
            return {
                {"sin(2 pi x)", [](const NoiseState& w) { return std::sin(two_pi * torus_point(w).x); }},
                {"cos(2 pi r)", [](const NoiseState& w) { return std::cos(two_pi * torus_point(w).r); }},
                {"indicator[0,0.5)(r)",
                 [](const NoiseState& w) { return torus_point(w).r < 0.5 ? 1.0 : 0.0; }},
                {"r*x", [](const NoiseState& w) { return torus_point(w).r * torus_point(w).x; }},
                {"sin(2 pi (r+x))",
                 [](const NoiseState& w) { return std::sin(two_pi * (torus_point(w).r + torus_point(w).x)); }},
            };
          },
          [&](const BernoulliShift&) -> std::vector<NamedObservable> {
            auto s = [](const NoiseState& w, std::size_t i) {
              return static_cast<double>(std::get<SymbolSequence>(w).symbols.at(i));
            };
            return {
                {"indicator(s0=0)", [s](const NoiseState& w) { return s(w, 0) == 0.0 ? 1.0 : 0.0; }},
                {"s0", [s](const NoiseState& w) { return s(w, 0); }},
                {"s0*s1", [s](const NoiseState& w) { return s(w, 0) * s(w, 1); }},
                {"indicator(s0=s1)", [s](const NoiseState& w) { return s(w, 0) == s(w, 1) ? 1.0 : 0.0; }},
                {"window mean",
                 [](const NoiseState& w) {
                   const auto& seq = std::get<SymbolSequence>(w).symbols;
                   double total = 0.0;
                   for (int v : seq) total += v;
                   return total / static_cast<double>(seq.size());
                 }},
            };
          },
          [&](const WienerGrid& g) -> std::vector<NamedObservable> {
            auto W = [sys](const NoiseState& w, double t) {
              return wiener_value(sys, std::get<IncrementPath>(w), t);
            };
            const double quarter = std::round(0.25 * g.horizon / g.mesh) * g.mesh;
            const double half = std::round(0.5 * g.horizon / g.mesh) * g.mesh;
            const double end = g.horizon;
            return {
                {"indicator(W(H/4)>0)", [=](const NoiseState& w) { return W(w, quarter) > 0.0 ? 1.0 : 0.0; }},
                {"W(H/2)^2", [=](const NoiseState& w) { return W(w, half) * W(w, half); }},
                {"indicator(W(H)>0)", [=](const NoiseState& w) { return W(w, end) > 0.0 ? 1.0 : 0.0; }},
                {"max(W(H/2),0)", [=](const NoiseState& w) { return std::max(W(w, half), 0.0); }},
                {"cos(W(H))", [=](const NoiseState& w) { return std::cos(W(w, end)); }},
            };
          },
      },
      sys.kind());
}

double group_law_defect(const NoiseSystem& sys, std::size_t trials, std::uint64_t seed) {
  double worst = 0.0;
  const double step = sys.time_step();
  std::int64_t max_steps = 16;
  if (const auto* w = std::get_if<WienerGrid>(&sys.kind())) {
    max_steps = std::llround(w->horizon / w->mesh) / 2;
  }
  for (std::size_t i = 0; i < trials; ++i) {
    RandomStream rng(seed, i);
    const NoiseState omega = sample_invariant(sys, rng);
    double t = 0.0, s = 0.0;
    if (step > 0.0) {
      t = static_cast<double>(rng.below(static_cast<std::uint64_t>(max_steps) + 1)) * step;
      s = static_cast<double>(rng.below(static_cast<std::uint64_t>(max_steps) + 1)) * step;
    } else {
      t = 8.0 * rng.uniform();
      s = 8.0 * rng.uniform();
    }
    const NoiseState lhs = shift(sys, t, shift(sys, s, omega));
    const NoiseState rhs = shift(sys, t + s, omega);
    worst = std::max(worst, state_distance(sys, lhs, rhs));
    worst = std::max(worst, state_distance(sys, shift(sys, 0.0, omega), omega));
  }
  return worst;
}

}  // namespace ergoperiod::noise
