#include "ergoperiod/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ergoperiod/error.hpp"
#include "ergoperiod/markov.hpp"
#include "ergoperiod/measures.hpp"
#include "ergoperiod/noise.hpp"
#include "ergoperiod/parallel.hpp"
#include "ergoperiod/rds.hpp"
#include "ergoperiod/stats.hpp"
#include "ergoperiod/sublinear.hpp"
#include "ergoperiod/wiener.hpp"

namespace ergoperiod::experiments {
namespace {

using config::ExperimentConfig;
using config::ExperimentKind;
using io::Json;
using markov::StochasticMatrix;

constexpr std::size_t kMaxListedSets = 4096;

struct Context {
  const ExperimentConfig& cfg;
  RunManifest& manifest;
  bool write_files;
  std::filesystem::path out_dir;

  void check(const std::string& name, bool passed, const std::string& detail) {
    manifest.checks.push_back({name, passed, detail});
  }

  std::filesystem::path artifact(const std::string& suffix) {
    const auto name = cfg.id + "." + suffix;
    manifest.artifacts.push_back(name);
    return out_dir / name;
  }

  void plot(const std::string& suffix, const io::Series& series, const std::string& x, const std::string& y) {
    const auto path = artifact(suffix);
    if (write_files) io::emit_plot_data(series, path, x, y);
  }

  void table(const std::string& suffix, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
    const auto path = artifact(suffix);
    if (write_files) io::write_table(header, rows, path);
  }
};

std::string fmt(double x) { return io::format_number(x); }

[[noreturn]] void missing(const std::string& key, const std::string& why) {
  fail(ErrorCode::ConfigInvalid, key + ": " + why);
}

noise::NoiseSystem build_noise(const config::NoiseSpec& spec) {
  if (spec.kind == "rotation") return noise::NoiseSystem::rotation(spec.alpha);
  if (spec.kind == "torus2") return noise::NoiseSystem::torus(spec.alpha);
  if (spec.kind == "bernoulli") return noise::NoiseSystem::bernoulli(spec.symbols, spec.window, spec.weights);
  return noise::NoiseSystem::wiener(spec.mesh, spec.horizon);
}

noise::NoiseSystem noise_or(const ExperimentConfig& cfg, const config::NoiseSpec& fallback) {
  return build_noise(cfg.system.noise.value_or(fallback));
}

std::optional<StochasticMatrix> load_matrix(const ExperimentConfig& cfg) {
  if (cfg.system.matrix) return StochasticMatrix::from_rows(*cfg.system.matrix);
  if (cfg.system.matrix_path) {
    std::filesystem::path path(*cfg.system.matrix_path);
    if (path.is_relative()) path = cfg.base_dir / path;
    return StochasticMatrix::from_csv(path);
  }
  return std::nullopt;
}

StochasticMatrix finite_map_kernel(const rds::FiniteMap& fm, std::vector<double> weights) {
  if (weights.empty()) weights.assign(fm.maps.size(), 1.0 / static_cast<double>(fm.maps.size()));
  const auto n = static_cast<std::size_t>(fm.n);
  std::vector<double> entries(n * n, 0.0);
  for (std::size_t k = 0; k < fm.maps.size(); ++k)
    for (std::size_t x = 0; x < n; ++x) entries[x * n + static_cast<std::size_t>(fm.maps[k][x])] += weights[k];
  for (std::size_t x = 0; x < n; ++x) {
    double total = 0.0;
    for (std::size_t y = 0; y < n; ++y) total += entries[x * n + y];
    for (std::size_t y = 0; y < n; ++y) entries[x * n + y] /= total;
  }
  return StochasticMatrix(n, std::move(entries));
}

struct FiniteSystem {
  StochasticMatrix p;
  rds::Cocycle cocycle;
};

FiniteSystem build_finite(const ExperimentConfig& cfg) {
  const auto& cc = cfg.system.cocycle;
  if (cc && cc->kind == "finite-map") {
    rds::FiniteMap fm;
    fm.n = static_cast<int>(cc->maps.front().size());
    for (const auto& m : cc->maps) {
      std::vector<int> zero_based;
      for (int y : m) zero_based.push_back(y - 1);
      fm.maps.push_back(std::move(zero_based));
    }
    auto p = finite_map_kernel(fm, cc->weights);
    return {std::move(p), rds::Cocycle::finite_map(fm, cc->weights, cc->window)};
  }
  auto p = load_matrix(cfg);
  if (!p) missing("system.matrix", "this experiment needs a matrix, matrix_path or finite-map cocycle");
  const int window = cc ? cc->window : 8;
  return {*p, rds::Cocycle::from_matrix(*p, window)};
}

bool is_finite(const ExperimentConfig& cfg) {
  return cfg.system.matrix || cfg.system.matrix_path ||
         (cfg.system.cocycle && cfg.system.cocycle->kind != "circle-shift");
}

rds::Cocycle build_circle(const ExperimentConfig& cfg) {
  const config::CocycleSpec spec = cfg.system.cocycle.value_or(config::CocycleSpec{});
  if (spec.kind != "circle-shift") missing("system.cocycle.kind", "this experiment needs a circle-shift cocycle");
  return rds::Cocycle::circle_shift(noise_or(cfg, config::NoiseSpec{}), spec.amplitude, spec.velocity, spec.mesh);
}

int integer_tau(const ExperimentConfig& cfg) {
  const double tau = cfg.system.tau.value_or(1.0);
  if (tau != std::round(tau) || tau < 1.0 || tau > 1000.0) missing("system.tau", "finite chains need an integer period in [1, 1000]");
  return static_cast<int>(tau);
}

rds::RandomPeriodicPath build_path(const ExperimentConfig& cfg) {
  if (is_finite(cfg)) {
    auto fs = build_finite(cfg);
    const int tau = integer_tau(cfg);
    if (cfg.system.start_state) {
      if (*cfg.system.start_state > static_cast<int>(fs.p.size())) missing("system.start_state", "outside the state space");
      return rds::RandomPeriodicPath::chain(fs.cocycle, tau, *cfg.system.start_state - 1);
    }
    if (cfg.system.rho0) return rds::RandomPeriodicPath::chain(fs.cocycle, tau, *cfg.system.rho0);
    return rds::RandomPeriodicPath::chain(fs.cocycle, tau, 0);
  }
  return rds::RandomPeriodicPath::circle(build_circle(cfg), cfg.system.offset.value_or(0.0), cfg.system.tau.value_or(1.0));
}

Json labels_json(markov::Mask m) {
  return Json{{"mask", m}, {"states", markov::mask_labels(m)}};
}

Json verdict_json(const markov::PSErgodicityVerdict& v) {
  Json sections = Json::array();
  for (const auto& s : v.sections) {
    Json j{{"s", s.s}, {"ergodic", s.ergodic}, {"invariant_sets", s.invariant_sets}};
    if (s.witness) {
      j["witness"] = labels_json(*s.witness);
      j["witness_mass"] = s.witness_mass;
    }
    sections.push_back(j);
  }
  return Json{{"ergodic", v.ergodic()}, {"sections", sections}};
}

markov::EnumerationMethod method_of(const ExperimentConfig& cfg) {
  const auto m = cfg.params.method.value_or("auto");
  if (m == "brute-force") return markov::EnumerationMethod::BruteForce;
  if (m == "structural") return markov::EnumerationMethod::Structural;
  return markov::EnumerationMethod::Auto;
}

std::vector<markov::DiscretePeriodicMeasure> measures_of(const ExperimentConfig& cfg, const StochasticMatrix& p,
                                                         int tau) {
  if (cfg.system.rho0) {
    if (cfg.system.rho0->size() != p.size()) missing("system.rho0", "length must match the state count");
    return {markov::DiscretePeriodicMeasure::from_initial(p, tau, *cfg.system.rho0)};
  }
  return markov::find_periodic_measures(p, tau);
}

// --- noise-check -----------------------------------------------------------

Json run_noise_check(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto sys = noise_or(cfg, config::NoiseSpec{});
  const double step = sys.time_step();
  const double t = cfg.params.shift.value_or(step > 0.0 ? step : 1.0);
  const auto n = cfg.params.n.value_or(100000);
  const auto trials = cfg.params.trials.value_or(1000);
  const double z_max = cfg.params.z_max.value_or(4.0);
  const double tol = cfg.params.tol.value_or(1e-12);

  const double defect = noise::group_law_defect(sys, trials, cfg.seed);
  ctx.check("group-law", defect <= tol, "max defect " + fmt(defect));
  Json rows = Json::array();
  std::uint64_t stream = 1;
  for (const auto& obs : noise::standard_battery(sys)) {
    const auto r = noise::check_preservation(sys, t, obs.fn, n, cfg.seed + stream++, cfg.workers);
    ctx.check("preservation " + obs.name, r.passed(z_max), "z=" + fmt(r.z_score));
    rows.push_back(Json{{"observable", obs.name},
                        {"mean_raw", r.mean_raw},
                        {"mean_shifted", r.mean_shifted},
                        {"z", r.z_score},
                        {"n", r.n}});
  }
  return Json{{"noise", sys.name()}, {"shift", t}, {"group_law_defect", defect}, {"preservation", rows}};
}

// --- rds-verify ------------------------------------------------------------

Json run_rds_verify(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto y = build_path(cfg);
  const auto trials = cfg.params.trials.value_or(1000);
  const double tol = cfg.params.tol.value_or(1e-12);
  const auto c = rds::verify_cocycle(y.cocycle(), trials, cfg.seed, tol);
  const auto s = rds::verify_skew_composition(y.cocycle(), trials, cfg.seed + 1, tol);
  const auto r = rds::verify_rpp(y, trials, cfg.seed + 2, tol);
  ctx.check("cocycle", c.passed(), "max defect " + fmt(c.max_defect));
  ctx.check("skew-composition", s.passed(), "max defect " + fmt(s.max_defect));
  ctx.check("random-periodic-path", r.passed(), "max defect " + fmt(r.max_defect));
  return Json{{"cocycle", y.cocycle().name()},
              {"period", y.period()},
              {"period_note", rds::RandomPeriodicPath::kPeriodNote},
              {"trials", trials},
              {"tol", tol},
              {"cocycle_defect", c.max_defect},
              {"skew_defect", s.max_defect},
              {"rpp_defect", r.max_defect}};
}

// --- estimate-measure ------------------------------------------------------

Json measure_json(const measures::EmpiricalMeasure& m) {
  Json partition;
  if (m.partition.kind() == measures::Partition::Kind::Atoms) {
    partition = Json{{"kind", "atoms"}, {"states", m.partition.size()}};
  } else {
    partition = Json{{"kind", "intervals"}, {"edges", m.partition.edges()}};
  }
  return Json{{"partition", partition}, {"weights", m.weights}, {"n_samples", m.n_samples}};
}

Json run_estimate_measure(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double tol = cfg.params.tol.value_or(1e-12);
  const double z_max = cfg.params.z_max.value_or(4.0);
  const auto n = cfg.params.n.value_or(10000);
  Json out;

  measures::PeriodicMeasureFamily family;
  if (is_finite(cfg)) {
    const auto fs = build_finite(cfg);
    const int tau = integer_tau(cfg);
    const auto pms = measures_of(cfg, fs.p, tau);
    const auto& pm = pms.front();
    const auto partition = measures::Partition::atoms(fs.p.size());
    family.tau = tau;
    family.kind = measures::FamilyKind::ExactVector;
    for (int k = 0; k < tau; ++k) {
      family.s_grid.push_back(k);
      family.measures.push_back(measures::EmpiricalMeasure::exact(partition, pm.rho[static_cast<std::size_t>(k)]));
    }
    const auto report = measures::check_family_periodicity(fs.p, family);
    ctx.check("family-periodicity", report.passed(tol), "max defect " + fmt(report.max_defect));
    const auto avg = measures::average_measure(family);
    const auto pushed = fs.p.push(avg.weights);
    double inv = 0.0;
    for (std::size_t i = 0; i < pushed.size(); ++i) inv = std::max(inv, std::abs(pushed[i] - avg.weights[i]));
    ctx.check("average-invariant", inv <= std::max(tol, 1e-12), "max defect " + fmt(inv));

    // The path started from rho_0 has law rho_k at time k.
    const auto y = rds::RandomPeriodicPath::chain(fs.cocycle, tau, pm.rho.front());
    Json sampled = Json::array();
    double worst = 0.0;
    for (int k = 0; k < tau; ++k) {
      const auto est = measures::estimate_rho(y, k, n, partition, cfg.seed + static_cast<std::uint64_t>(k), cfg.workers);
      for (std::size_t b = 0; b < partition.size(); ++b) {
        const double p = pm.rho[static_cast<std::size_t>(k)][b];
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        worst = std::max(worst, std::abs(stats::z_ratio(est.weights[b] - p, se)));
      }
      sampled.push_back(measure_json(est));
    }
    ctx.check("path-law", worst <= z_max, "max |z| " + fmt(worst));
    out["sampled"] = sampled;
    out["average"] = measure_json(avg);
    out["periodicity_defect"] = report.max_defect;
    out["average_defect"] = inv;
    io::Series avg_series;
    for (std::size_t b = 0; b < avg.weights.size(); ++b) avg_series.emplace_back(partition.center(b), avg.weights[b]);
    ctx.plot("average.csv", avg_series, "state", "weight");
  } else {
    const auto y = build_path(cfg);
    const auto m = cfg.params.m.value_or(16);
    const auto bins = cfg.params.bins.value_or(64);
    const auto partition = measures::Partition::circle(bins);
    family = measures::estimate_family(y, m, n, partition, cfg.seed, cfg.workers);
    const auto report = measures::check_family_periodicity(y, family, n, cfg.seed + 1, cfg.workers);
    ctx.check("family-periodicity", report.passed(z_max), "max |z| " + fmt(report.max_abs_z));
    const auto avg = measures::average_measure(family);
    out["average"] = measure_json(avg);
    out["periodicity_max_z"] = report.max_abs_z;
    io::Series avg_series;
    for (std::size_t b = 0; b < avg.weights.size(); ++b) avg_series.emplace_back(partition.center(b), avg.weights[b]);
    ctx.plot("average.csv", avg_series, "bin_center", "weight");
  }
  Json members = Json::array();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < family.measures.size(); ++i) {
    members.push_back(Json{{"s", family.s_grid[i]}, {"measure", measure_json(family.measures[i])}});
    const auto& m = family.measures[i];
    for (std::size_t b = 0; b < m.weights.size(); ++b) rows.push_back({family.s_grid[i], m.partition.center(b), m.weights[b]});
  }
  ctx.table("family.csv", {"s", "bin_center", "weight"}, rows);
  out["tau"] = family.tau;
  out["family"] = members;
  return out;
}

// --- ps-ergodic ------------------------------------------------------------

Json run_ps_ergodic(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto fs = build_finite(cfg);
  const int tau = integer_tau(cfg);
  const double atol = cfg.params.atol.value_or(markov::kDefaultAtol);
  const auto pms = measures_of(cfg, fs.p, tau);
  Json list = Json::array();
  for (std::size_t i = 0; i < pms.size(); ++i) {
    const auto& pm = pms[i];
    const auto verdict = markov::is_ps_ergodic(fs.p, tau, pm, atol, method_of(cfg));
    const bool agree = markov::cross_check_ps(fs.p, tau, pm, atol);
    ctx.check("cross-check measure " + std::to_string(i), agree,
              agree ? "enumeration and class structure agree" : "enumeration and class structure disagree");
    const auto family = markov::enumerate_invariant_sets(fs.p, tau, pm.rho.front(), atol, method_of(cfg));
    Json sets = Json::array();
    for (std::size_t k = 0; k < family.subsets.size() && k < kMaxListedSets; ++k) sets.push_back(labels_json(family.subsets[k]));
    list.push_back(Json{{"rho", pm.rho},
                        {"verdict", verdict_json(verdict)},
                        {"cross_check", agree},
                        {"invariant_sets_s0", Json{{"count", family.subsets.size()},
                                                   {"support", labels_json(family.support)},
                                                   {"sets", sets}}}});
    if (i == 0 && cfg.expect.ergodic) {
      ctx.check("expected verdict", verdict.ergodic() == *cfg.expect.ergodic,
                std::string("verdict ") + (verdict.ergodic() ? "true" : "false"));
    }
    if (i == 0 && cfg.expect.witness) {
      std::optional<markov::Mask> witness;
      for (const auto& s : verdict.sections)
        if (s.witness) {
          witness = s.witness;
          break;
        }
      const auto expected = markov::mask_from_labels(*cfg.expect.witness);
      ctx.check("expected witness", witness && *witness == expected,
                witness ? "witness mask " + std::to_string(*witness) : "no witness");
    }
  }
  return Json{{"tau", tau}, {"states", fs.p.size()}, {"atol", atol}, {"measures", list}};
}

// --- condition-a -----------------------------------------------------------

Json run_condition_a(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto fs = build_finite(cfg);
  const int tau = integer_tau(cfg);
  const double atol = cfg.params.atol.value_or(markov::kDefaultAtol);
  if (!cfg.system.rho0) missing("system.rho0", "condition-a needs the periodic measure's rho0");
  const auto pm = markov::DiscretePeriodicMeasure::from_initial(fs.p, tau, *cfg.system.rho0);
  const int s = static_cast<int>(cfg.params.s.value_or(0.0));
  if (s != cfg.params.s.value_or(0.0) || s >= tau) missing("params.s", "must be an integer section time below tau");
  const markov::Mask support0 = markov::support_mask(pm.rho.front(), atol);
  int start = 0;
  if (cfg.system.start_state) {
    start = *cfg.system.start_state - 1;
    if (!(support0 >> start & 1u)) missing("system.start_state", "must lie in the support of rho0");
  } else {
    start = std::countr_zero(support0);
  }
  const auto y = rds::RandomPeriodicPath::chain(fs.cocycle, tau, start);
  const auto family = markov::enumerate_invariant_sets(fs.p, tau, pm.rho[static_cast<std::size_t>(s)], atol, method_of(cfg));
  const auto n_paths = cfg.params.n_paths.value_or(200);
  const auto window = static_cast<int>(cfg.params.window.value_or(16));
  const auto report = markov::check_condition_A(y, s, family, n_paths, window, cfg.seed, cfg.workers);
  const auto verdict = markov::is_ps_ergodic(fs.p, tau, pm, atol, method_of(cfg));
  if (verdict.ergodic()) {
    ctx.check("condition-a on a PS-ergodic measure", report.strengthened_violations == 0,
              std::to_string(report.strengthened_violations) + " invariant sets split across sampled omega");
  }
  if (cfg.expect.violations) {
    ctx.check("expected violations", report.violations == *cfg.expect.violations,
              std::to_string(report.violations) + " split traces");
  }
  Json tallies = Json::array();
  for (std::size_t i = 0; i < report.tallies.size() && i < kMaxListedSets; ++i) {
    const auto& t = report.tallies[i];
    tallies.push_back(Json{{"gamma", labels_json(t.gamma)},
                           {"inside", t.inside},
                           {"outside", t.outside},
                           {"partial", t.partial},
                           {"same_side", t.same_side()}});
  }
  return Json{{"s", s},
              {"start_state", start + 1},
              {"n_paths", report.n_paths},
              {"window", report.window},
              {"ps_ergodic", verdict.ergodic()},
              {"violations", report.violations},
              {"strengthened_violations", report.strengthened_violations},
              {"tallies", tallies}};
}

// --- sublinear-invariance --------------------------------------------------

Json run_sublinear_invariance(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (!is_finite(cfg)) {
    const auto y = build_path(cfg);
    const auto m = cfg.params.m.value_or(16);
    const double t = cfg.params.shift.value_or(y.period() / static_cast<double>(m));
    const auto n = cfg.params.n.value_or(10000);
    const double z_max = cfg.params.z_max.value_or(4.0);
    const auto battery = sublinear::joint_battery();
    const auto report = sublinear::check_sublinear_invariance(y, m, t, battery, n, cfg.seed, cfg.workers);
    Json per = Json::array();
    for (std::size_t i = 0; i < battery.size(); ++i) {
      per.push_back(Json{{"observable", battery[i].name}, {"max_abs_z", report.per_observable[i]}});
      ctx.check("invariance " + battery[i].name, report.per_observable[i] <= z_max, "max |z| " + fmt(report.per_observable[i]));
    }
    return Json{{"m", m}, {"shift", t}, {"n", n}, {"observables", per}, {"max_abs_z", report.max_abs_z}};
  }

  const auto fs = build_finite(cfg);
  const int tau = integer_tau(cfg);
  const double tol = cfg.params.tol.value_or(1e-12);
  const auto pm = measures_of(cfg, fs.p, tau).front();
  const auto ue = sublinear::UpperExpectation::from_periodic(pm);
  const auto trials = cfg.params.trials.value_or(100);
  const std::size_t n = fs.p.size();
  std::vector<std::vector<double>> battery;
  double sub = 0.0, hom = 0.0, mono = 0.0, cst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    RandomStream rng(cfg.seed, i);
    std::vector<double> phi(n), psi(n), sum(n), scaled(n), above(n);
    const double lambda = 3.0 * rng.uniform();
    const double c = 2.0 * rng.uniform() - 1.0;
    for (std::size_t x = 0; x < n; ++x) {
      phi[x] = 2.0 * rng.uniform() - 1.0;
      psi[x] = 2.0 * rng.uniform() - 1.0;
      sum[x] = phi[x] + psi[x];
      scaled[x] = lambda * phi[x];
      above[x] = phi[x] + rng.uniform();
    }
    const double e_phi = sublinear::upper_expect(ue, phi);
    sub = std::max(sub, sublinear::upper_expect(ue, sum) - e_phi - sublinear::upper_expect(ue, psi));
    hom = std::max(hom, std::abs(sublinear::upper_expect(ue, scaled) - lambda * e_phi));
    mono = std::max(mono, e_phi - sublinear::upper_expect(ue, above));
    cst = std::max(cst, std::abs(sublinear::upper_expect(ue, std::vector<double>(n, c)) - c));
    battery.push_back(std::move(phi));
  }
  const auto one = sublinear::check_sublinear_invariance(fs.p, ue, battery, 1);
  const auto full = sublinear::check_sublinear_invariance(fs.p, ue, battery, tau);
  ctx.check("subadditivity", sub <= tol, "max excess " + fmt(sub));
  ctx.check("positive homogeneity", hom <= tol, "max defect " + fmt(hom));
  ctx.check("monotonicity", mono <= tol, "max excess " + fmt(mono));
  ctx.check("constant preservation", cst <= tol, "max defect " + fmt(cst));
  ctx.check("invariance k=1", one.passed(tol), "max defect " + fmt(one.max_defect));
  ctx.check("invariance k=tau", full.passed(tol), "max defect " + fmt(full.max_defect));
  return Json{{"tau", tau},
              {"trials", trials},
              {"rho", pm.rho},
              {"subadditivity_excess", sub},
              {"homogeneity_defect", hom},
              {"monotonicity_excess", mono},
              {"constant_defect", cst},
              {"invariance_defect_k1", one.max_defect},
              {"invariance_defect_tau", full.max_defect}};
}

// --- sublinear-ergodic -----------------------------------------------------

Json set_verdicts_json(const sublinear::ErgodicityVerdict& v, bool masks) {
  Json out = Json::array();
  for (const auto& s : v.sets) {
    Json j{{"invariant", s.invariant},
           {"capacity", s.capacity},
           {"complement_capacity", s.complement_capacity},
           {"passed", s.passed},
           {"status", s.status}};
    if (masks) j["set"] = labels_json(s.set);
    else j["candidate"] = s.set;
    out.push_back(j);
  }
  return out;
}

Json run_sublinear_ergodic(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double alpha = cfg.system.noise ? cfg.system.noise->alpha : std::numbers::sqrt2 - 1.0;
  const double atol = cfg.params.atol.value_or(markov::kDefaultAtol);
  const sublinear::TwoIntervalSystem exact(alpha);
  const double e_first = exact.upper_expect([](double x) { return x < 1.0 ? 1.0 : 0.0; });
  const double v_mid = exact.capacity(sublinear::IntervalSet::interval(0.5, 1.5));
  ctx.check("upper expectation of 1[0,1)", e_first == 1.0, "value " + fmt(e_first));
  ctx.check("capacity of [0.5,1.5)", std::abs(v_mid - 0.5) <= 1e-12, "value " + fmt(v_mid));
  const std::vector<sublinear::IntervalSet> candidates{
      sublinear::IntervalSet{}, sublinear::IntervalSet::interval(0.0, 2.0), sublinear::IntervalSet::interval(0.0, 1.0),
      sublinear::IntervalSet::interval(0.5, 1.5)};
  const auto exact_verdict = exact.ergodic_check(candidates, atol);

  const int n = cfg.params.circle_points.value_or(12);
  const int q = cfg.params.q.value_or(4);
  const int p = cfg.params.p.value_or(1);
  if (n % q != 0) missing("params.circle_points", "must be a multiple of params.q");
  if (p >= q) missing("params.p", "must be below params.q");
  const auto surrogate = sublinear::two_interval_surrogate(n, p, q);
  const auto verdict = sublinear::sublinear_ergodic_check(surrogate, std::nullopt, atol);
  if (cfg.expect.ergodic) {
    ctx.check("expected surrogate verdict", verdict.ergodic() == *cfg.expect.ergodic,
              std::string("verdict ") + (verdict.ergodic() ? "true" : "false"));
  }
  return Json{{"alpha", alpha},
              {"upper_expectation_first_interval", e_first},
              {"capacity_middle", v_mid},
              {"exact_candidates", set_verdicts_json(exact_verdict, false)},
              {"surrogate", Json{{"circle_points", n}, {"p", p}, {"q", q}, {"ergodic", verdict.ergodic()},
                                 {"sets", set_verdicts_json(verdict, true)}}}};
}

// --- birkhoff-qs -----------------------------------------------------------

sublinear::JointObservable xi_of(const ExperimentConfig& cfg) {
  const auto name = cfg.params.xi.value_or("sin-noise");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (name == "sin-phase") return [](const noise::NoiseState&, double x) { return std::sin(two_pi * x); };
  if (name == "half-indicator") return [](const noise::NoiseState&, double x) { return x < 0.5 ? 1.0 : 0.0; };
  if (name == "constant") {
    const double c = cfg.params.xi_constant.value_or(1.0);
    return [c](const noise::NoiseState&, double) { return c; };
  }
  return [](const noise::NoiseState& w, double) { return std::sin(two_pi * noise::rotation_coordinate(w)); };
}

Json run_birkhoff_qs(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto y = build_path(cfg);
  sublinear::QSOptions options;
  options.horizons = cfg.params.horizons.value_or(std::vector<double>{100.0, 1000.0, 10000.0});
  options.delta = cfg.params.delta.value_or(1.0);
  options.n_paths = cfg.params.n_paths.value_or(64);
  options.m = cfg.params.m.value_or(16);
  options.epsilon = cfg.params.epsilon.value_or(0.05);
  options.target = cfg.params.target;
  if (!options.target && cfg.params.xi.value_or("") == "constant") options.target = cfg.params.xi_constant.value_or(1.0);
  options.target_samples = cfg.params.n.value_or(100000);
  options.seed = cfg.seed;
  options.workers = cfg.workers;
  const auto report = sublinear::birkhoff_qs_lln(y, xi_of(cfg), options);
  const double limit = cfg.params.max_fraction.value_or(0.01);
  ctx.check("max deviant fraction at largest T", report.max_fraction.back() <= limit,
            "fraction " + fmt(report.max_fraction.back()));
  ctx.check("nonincreasing in T", report.nonincreasing(), "");
  Json rows = Json::array();
  io::Series series;
  for (std::size_t h = 0; h < report.horizons.size(); ++h) {
    Json per_s = Json::array();
    for (std::size_t i = 0; i < report.s_grid.size(); ++i)
      per_s.push_back(Json{{"s", report.s_grid[i]}, {"fraction", report.fractions[h][i]}, {"mean_average", report.mean_average[h][i]}});
    rows.push_back(Json{{"T", report.horizons[h]}, {"max_fraction", report.max_fraction[h]}, {"per_s", per_s}});
    series.emplace_back(report.horizons[h], report.max_fraction[h]);
  }
  ctx.plot("fraction.csv", series, "T", "max_fraction");
  return Json{{"target", report.target},
              {"epsilon", report.epsilon},
              {"delta", report.delta},
              {"n_paths", report.n_paths},
              {"m", report.s_grid.size()},
              {"horizons", rows}};
}

// --- wiener-shift ----------------------------------------------------------

Json run_wiener_shift(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double h = cfg.system.noise && cfg.system.noise->kind == "wiener" ? cfg.system.noise->mesh : 0.01;
  const double tau = cfg.system.tau.value_or(0.25);
  const auto n_shifts = cfg.params.n_shifts.value_or(100000);
  const double z_max = cfg.params.z_max.value_or(4.0);
  const auto resamples = cfg.params.resamples.value_or(200);
  const auto lags = cfg.params.lags.value_or(std::vector<int>{2, 3, 5});
  wiener::OrbitOptions options;
  options.bootstrap_resamples = resamples;

  Json functionals = Json::array();
  std::uint64_t stream = 0;
  for (const auto& f : wiener::standard_battery(tau)) {
    const auto r = wiener::birkhoff_shift_average(f, tau, n_shifts, h, cfg.seed + stream, options);
    const auto iid = wiener::iid_mean(f, tau, n_shifts, h, cfg.seed + stream, cfg.workers);
    const double z_iid = stats::z_ratio(r.estimate - iid.mean, std::hypot(r.stderr_bootstrap, iid.stderr_of_mean));
    ++stream;
    ctx.check("orbit average " + f.name, r.passed(z_max), "z=" + fmt(r.z()));
    ctx.check("orbit vs i.i.d. " + f.name, std::abs(z_iid) <= z_max, "z=" + fmt(z_iid));
    functionals.push_back(Json{{"functional", f.name},
                               {"N", r.n},
                               {"estimate", r.estimate},
                               {"stderr", r.stderr_bootstrap},
                               {"stderr_naive", r.stderr_naive},
                               {"target", *r.target},
                               {"z", r.z()},
                               {"iid_mean", iid.mean},
                               {"iid_stderr", iid.stderr_of_mean},
                               {"pass", r.passed(z_max)}});
    ctx.plot("running-" + std::to_string(stream) + ".csv", r.running, "n", "running_average");
  }

  const auto f = wiener::standard_battery(tau).front();
  const auto cov = wiener::decorrelation(f, f, tau, lags, n_shifts, h, cfg.seed + 100, resamples);
  Json lag_rows = Json::array();
  for (const auto& c : cov) {
    if (c.lag >= f.depth)
      ctx.check("decorrelation lag " + std::to_string(c.lag), std::abs(c.z()) <= z_max, "z=" + fmt(c.z()));
    lag_rows.push_back(Json{{"lag", c.lag}, {"covariance", c.covariance}, {"stderr", c.stderr_of_cov}, {"z", c.z()}});
  }
  const auto regen = wiener::check_regeneration(h, tau, cfg.params.n.value_or(10000), cfg.seed + 200);
  ctx.check("regenerated increments", regen.passed(), "KS " + fmt(regen.ks) + " vs " + fmt(regen.critical));
  return Json{{"tau", tau},
              {"mesh", h},
              {"functionals", functionals},
              {"decorrelation", lag_rows},
              {"regeneration", Json{{"ks", regen.ks}, {"critical", regen.critical}, {"n", regen.n}}}};
}

// --- canonical-sample ------------------------------------------------------

Json run_canonical_sample(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto fs = build_finite(cfg);
  const auto& p = fs.p;
  const std::vector<double> rho = cfg.system.rho0 ? *cfg.system.rho0 : markov::find_periodic_measures(p, 1).front().rho.front();
  if (rho.size() != p.size()) missing("system.rho0", "length must match the state count");
  const auto times = cfg.params.times.value_or(std::vector<int>{0, 1});
  const auto n = cfg.params.n.value_or(10000);
  const double z_max = cfg.params.z_max.value_or(4.0);
  const std::size_t states = p.size();
  std::size_t cells = 1;
  for (std::size_t i = 0; i < times.size(); ++i) {
    cells *= states;
    if (cells > 100000) missing("params.times", "too many state tuples to tabulate");
  }

  const auto paths = markov::sample_canonical(p, rho, times, n, cfg.seed, cfg.workers);
  std::vector<std::size_t> counts(cells, 0);
  auto index_of = [&](std::span<const int> t) {
    std::size_t idx = 0;
    for (int x : t) idx = idx * states + static_cast<std::size_t>(x);
    return idx;
  };
  for (const auto& path : paths) ++counts[index_of(path)];
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const double exact = markov::canonical_expectation(
        p, rho, times, [&](std::span<const int> t) { return index_of(t) == cell ? 1.0 : 0.0; });
    const double freq = static_cast<double>(counts[cell]) / static_cast<double>(n);
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n));
    worst = std::max(worst, std::abs(stats::z_ratio(freq - exact, se)));
    rows.push_back({static_cast<double>(cell), freq, exact});
  }
  ctx.check("finite-dimensional law", worst <= z_max, "max |z| " + fmt(worst));
  ctx.table("fdd.csv", {"tuple_index", "empirical", "exact"}, rows);

  Json out{{"times", times}, {"n", n}, {"rho", rho}, {"max_abs_z", worst}};
  const int k = static_cast<int>(cfg.params.shift.value_or(1.0));
  const auto moved = p.power(k).push(rho);
  double drift = 0.0;
  for (std::size_t i = 0; i < states; ++i) drift = std::max(drift, std::abs(moved[i] - rho[i]));
  if (drift <= 1e-10) {
    const auto r = markov::check_shift_invariance_canonical(
        p, rho, times, [](std::span<const int> t) { return t[0] == 0 ? 1.0 : 0.0; }, k, n, cfg.seed + 1, cfg.workers);
    ctx.check("shift invariance", r.passed(z_max), "z=" + fmt(r.z_score));
    out["shift_invariance"] = Json{{"k", k}, {"mean_base", r.mean_base}, {"mean_shifted", r.mean_shifted}, {"z", r.z_score}};
  } else {
    out["shift_invariance"] = Json{{"k", k}, {"status", "not run: rho P^k differs from rho"}, {"drift", drift}};
  }
  if (cfg.system.tau) {
    const int tau = integer_tau(cfg);
    const auto pm = markov::DiscretePeriodicMeasure::from_initial(p, tau, rho);
    const auto ue = sublinear::UpperExpectation::from_periodic(pm);
    const double value = sublinear::canonical_sublinear_expect(
        p, ue, times, [](std::span<const int> t) { return t[0] == 0 ? 1.0 : 0.0; });
    out["sublinear_first_state"] = value;
  }
  return out;
}

std::string_view module_of(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::NoiseCheck: return "noise";
    case ExperimentKind::RdsVerify: return "rds";
    case ExperimentKind::EstimateMeasure: return "measures";
    case ExperimentKind::PsErgodic:
    case ExperimentKind::ConditionA:
    case ExperimentKind::CanonicalSample: return "markov";
    case ExperimentKind::SublinearInvariance:
    case ExperimentKind::SublinearErgodic:
    case ExperimentKind::BirkhoffQs: return "sublinear";
    case ExperimentKind::WienerShift: return "wiener";
  }
  return "cli";
}

Json dispatch(Context& ctx) {
  switch (ctx.cfg.experiment) {
    case ExperimentKind::NoiseCheck: return run_noise_check(ctx);
    case ExperimentKind::RdsVerify: return run_rds_verify(ctx);
    case ExperimentKind::EstimateMeasure: return run_estimate_measure(ctx);
    case ExperimentKind::PsErgodic: return run_ps_ergodic(ctx);
    case ExperimentKind::ConditionA: return run_condition_a(ctx);
    case ExperimentKind::SublinearInvariance: return run_sublinear_invariance(ctx);
    case ExperimentKind::SublinearErgodic: return run_sublinear_ergodic(ctx);
    case ExperimentKind::BirkhoffQs: return run_birkhoff_qs(ctx);
    case ExperimentKind::WienerShift: return run_wiener_shift(ctx);
    case ExperimentKind::CanonicalSample: return run_canonical_sample(ctx);
  }
  fail(ErrorCode::InvalidArgument, "unknown experiment");
}

Json checks_json(const std::vector<Check>& checks) {
  Json out = Json::array();
  for (const auto& c : checks) out.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return out;
}

}  // namespace

bool RunManifest::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Json RunManifest::result_json() const {
  return Json{{"experiment", experiment}, {"id", id},         {"config_digest", digest},
              {"passed", passed()},       {"checks", checks_json(checks)}, {"result", result}};
}

Json RunManifest::manifest_json() const {
  return Json{{"experiment", experiment},
              {"id", id},
              {"config_digest", digest},
              {"version", version},
              {"wall_seconds", wall_seconds},
              {"workers", workers},
              {"passed", passed()},
              {"checks", checks_json(checks)},
              {"artifacts", artifacts}};
}

RunManifest run(const config::ExperimentConfig& cfg, bool write_files) {
  RunManifest manifest;
  manifest.experiment = std::string(config::to_string(cfg.experiment));
  manifest.id = cfg.id;
  // Worker count and output location never change results, so they stay
  // out of the digest.
  Json canonical = config::serialize(cfg);
  canonical.erase("workers");
  canonical.erase("out_dir");
  manifest.digest = io::digest(canonical);
  manifest.workers = resolve_workers(cfg.workers);
  Context ctx{cfg, manifest, write_files, std::filesystem::path(cfg.out_dir)};
  const auto start = std::chrono::steady_clock::now();
  try {
    manifest.result = dispatch(ctx);
  } catch (const Error& e) {
    std::ostringstream msg;
    std::string detail = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    if (detail.rfind(prefix, 0) == 0) detail.erase(0, prefix.size());
    msg << "[" << module_of(cfg.experiment) << "] experiment '" << cfg.id << "': " << detail;
    throw Error(e.code(), msg.str());
  }
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (write_files) {
    const auto result_path = ctx.artifact("result.json");
    const auto manifest_path = ctx.out_dir / (cfg.id + ".manifest.json");
    io::write_text(result_path, io::canonical_dump(manifest.result_json()));
    io::write_text(manifest_path, io::canonical_dump(manifest.manifest_json()));
  }
  return manifest;
}

}  // namespace ergoperiod::experiments
