#include "ergoperiod/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ergoperiod/error.hpp"
#include "ergoperiod/stochastic_matrix.hpp"

namespace ergoperiod::config {
namespace {

using io::Json;

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  fail(ErrorCode::ConfigInvalid, key + ": " + why);
}

template <class T>
struct Tag {};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double as_double(const Json& v, const std::string& key, Tag<double>) {
  if (!v.is_number()) invalid(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(key, "expected a finite number");
  return x;
}

std::uint64_t as_value(const Json& v, const std::string& key, Tag<std::uint64_t>) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  invalid(key, "expected a nonnegative integer");
}

int as_value(const Json& v, const std::string& key, Tag<int>) {
  if (!v.is_number_integer()) invalid(key, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < -1000000000 || x > 1000000000) invalid(key, "integer out of range");
  return static_cast<int>(x);
}

double as_value(const Json& v, const std::string& key, Tag<double> t) { return as_double(v, key, t); }

bool as_value(const Json& v, const std::string& key, Tag<bool>) {
  if (!v.is_boolean()) invalid(key, "expected true or false");
  return v.get<bool>();
}

std::string as_value(const Json& v, const std::string& key, Tag<std::string>) {
  if (!v.is_string()) invalid(key, "expected a string");
  return v.get<std::string>();
}

template <class T>
std::vector<T> as_value(const Json& v, const std::string& key, Tag<std::vector<T>>) {
  if (!v.is_array()) invalid(key, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_value(v[i], key + "[" + std::to_string(i) + "]", Tag<T>{}));
  return out;
}

class Reader {
 public:
  Reader(const Json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) invalid(path_.empty() ? "<document>" : path_, "expected an object");
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return std::nullopt;
    return as_value(*it, join(path_, key), Tag<T>{});
  }

  template <class T>
  T req(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) invalid(join(path_, key), "missing required key");
    return *v;
  }

  const Json* sub(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string key(const std::string& k) const { return join(path_, k); }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it)
      if (!seen_.count(it.key())) invalid(join(path_, it.key()), "unknown key");
  }

 private:
  const Json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T, class Check>
void check(const std::optional<T>& v, const std::string& key, Check ok, const char* why) {
  if (v && !ok(*v)) invalid(key, why);
}

void check_probability(const std::vector<double>& w, const std::string& key) {
  double total = 0.0;
  for (double x : w) {
    if (x < 0.0) invalid(key, "weights must be nonnegative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) invalid(key, "weights must sum to 1");
}

NoiseSpec parse_noise(const Json& doc) {
  Reader r(doc, "system.noise");
  NoiseSpec spec;
  spec.kind = r.req<std::string>("kind");
  if (spec.kind == "rotation" || spec.kind == "torus2") {
    spec.alpha = r.opt<double>("alpha").value_or(spec.alpha);
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) invalid(r.key("alpha"), "must lie in (0, 1)");
  } else if (spec.kind == "bernoulli") {
    spec.symbols = r.opt<int>("symbols").value_or(spec.symbols);
    spec.window = r.opt<int>("window").value_or(spec.window);
    spec.weights = r.opt<std::vector<double>>("weights").value_or(std::vector<double>{});
    if (spec.symbols < 2 || spec.symbols > 64) invalid(r.key("symbols"), "must lie in [2, 64]");
    if (spec.window < 1 || spec.window > 4096) invalid(r.key("window"), "must lie in [1, 4096]");
    if (!spec.weights.empty()) {
      if (static_cast<int>(spec.weights.size()) != spec.symbols) invalid(r.key("weights"), "need one weight per symbol");
      check_probability(spec.weights, r.key("weights"));
    }
  } else if (spec.kind == "wiener") {
    spec.mesh = r.opt<double>("mesh").value_or(spec.mesh);
    spec.horizon = r.opt<double>("horizon").value_or(spec.horizon);
    if (!(spec.mesh > 0.0 && spec.mesh <= 1.0)) invalid(r.key("mesh"), "must lie in (0, 1]");
    if (!(spec.horizon >= spec.mesh && spec.horizon <= 1e4)) invalid(r.key("horizon"), "must lie in [mesh, 1e4]");
  } else {
    invalid(r.key("kind"), "expected rotation, torus2, bernoulli or wiener");
  }
  r.finish();
  return spec;
}

CocycleSpec parse_cocycle(const Json& doc) {
  Reader r(doc, "system.cocycle");
  CocycleSpec spec;
  spec.kind = r.req<std::string>("kind");
  if (spec.kind == "circle-shift") {
    spec.amplitude = r.opt<double>("amplitude").value_or(spec.amplitude);
    spec.velocity = r.opt<double>("velocity").value_or(spec.velocity);
    spec.mesh = r.opt<double>("mesh").value_or(spec.mesh);
    if (std::abs(spec.amplitude) > 10.0) invalid(r.key("amplitude"), "must lie in [-10, 10]");
    if (std::abs(spec.velocity) > 1e3) invalid(r.key("velocity"), "must lie in [-1000, 1000]");
    if (spec.mesh < 0.0) invalid(r.key("mesh"), "must be >= 0");
  } else if (spec.kind == "finite-map") {
    spec.maps = r.req<std::vector<std::vector<int>>>("maps");
    spec.weights = r.opt<std::vector<double>>("weights").value_or(std::vector<double>{});
    spec.window = r.opt<int>("window").value_or(spec.window);
    if (spec.maps.size() < 2 || spec.maps.size() > 64) invalid(r.key("maps"), "need 2..64 maps");
    const std::size_t n = spec.maps.front().size();
    if (n < 1 || n > 62) invalid(r.key("maps"), "maps must cover 1..62 states");
    for (const auto& m : spec.maps) {
      if (m.size() != n) invalid(r.key("maps"), "all maps must cover the same states");
      for (int y : m)
        if (y < 1 || y > static_cast<int>(n)) invalid(r.key("maps"), "images are 1-based state labels");
    }
    if (!spec.weights.empty()) {
      if (spec.weights.size() != spec.maps.size()) invalid(r.key("weights"), "need one weight per map");
      check_probability(spec.weights, r.key("weights"));
    }
    if (spec.window < 1 || spec.window > 4096) invalid(r.key("window"), "must lie in [1, 4096]");
  } else if (spec.kind == "matrix") {
    spec.window = r.opt<int>("window").value_or(spec.window);
    if (spec.window < 1 || spec.window > 4096) invalid(r.key("window"), "must lie in [1, 4096]");
  } else {
    invalid(r.key("kind"), "expected circle-shift, finite-map or matrix");
  }
  r.finish();
  return spec;
}

SystemSpec parse_system(const Json& doc) {
  Reader r(doc, "system");
  SystemSpec spec;
  if (const Json* n = r.sub("noise")) spec.noise = parse_noise(*n);
  if (const Json* c = r.sub("cocycle")) spec.cocycle = parse_cocycle(*c);
  spec.matrix = r.opt<std::vector<std::vector<double>>>("matrix");
  spec.matrix_path = r.opt<std::string>("matrix_path");
  spec.tau = r.opt<double>("tau");
  spec.rho0 = r.opt<std::vector<double>>("rho0");
  spec.start_state = r.opt<int>("start_state");
  spec.offset = r.opt<double>("offset");
  r.finish();

  if (spec.matrix && spec.matrix_path) invalid("system.matrix_path", "give either matrix or matrix_path, not both");
  if (spec.matrix) {
    if (spec.matrix->empty() || spec.matrix->size() > 62) invalid("system.matrix", "need 1..62 rows");
    try {
      (void)markov::StochasticMatrix::from_rows(*spec.matrix);
    } catch (const Error& e) {
      invalid("system.matrix", e.what());
    }
  }
  check(spec.tau, "system.tau", [](double t) { return t > 0.0 && t <= 1e6; }, "must lie in (0, 1e6]");
  if (spec.rho0) {
    if (spec.rho0->empty()) invalid("system.rho0", "must be nonempty");
    check_probability(*spec.rho0, "system.rho0");
    if (spec.matrix && spec.matrix->size() != spec.rho0->size()) invalid("system.rho0", "length must match the matrix");
  }
  check(spec.start_state, "system.start_state", [](int s) { return s >= 1 && s <= 62; }, "is a 1-based state label");
  check(spec.offset, "system.offset", [](double o) { return o >= 0.0 && o < 1.0; }, "must lie in [0, 1)");
  return spec;
}

Params parse_params(const Json& doc) {
  Reader r(doc, "params");
  Params p;
  p.n = r.opt<std::uint64_t>("n");
  p.n_paths = r.opt<std::uint64_t>("n_paths");
  p.n_shifts = r.opt<std::uint64_t>("n_shifts");
  p.trials = r.opt<std::uint64_t>("trials");
  p.m = r.opt<std::uint64_t>("m");
  p.bins = r.opt<std::uint64_t>("bins");
  p.window = r.opt<std::uint64_t>("window");
  p.resamples = r.opt<std::uint64_t>("resamples");
  p.s = r.opt<double>("s");
  p.shift = r.opt<double>("shift");
  p.delta = r.opt<double>("delta");
  p.atol = r.opt<double>("atol");
  p.epsilon = r.opt<double>("epsilon");
  p.tol = r.opt<double>("tol");
  p.z_max = r.opt<double>("z_max");
  p.max_fraction = r.opt<double>("max_fraction");
  p.target = r.opt<double>("target");
  p.xi_constant = r.opt<double>("xi_constant");
  p.horizons = r.opt<std::vector<double>>("horizons");
  p.lags = r.opt<std::vector<int>>("lags");
  p.times = r.opt<std::vector<int>>("times");
  p.method = r.opt<std::string>("method");
  p.xi = r.opt<std::string>("xi");
  p.circle_points = r.opt<int>("circle_points");
  p.p = r.opt<int>("p");
  p.q = r.opt<int>("q");
  r.finish();

  const auto in = [](std::uint64_t lo, std::uint64_t hi) { return [=](std::uint64_t v) { return v >= lo && v <= hi; }; };
  check(p.n, "params.n", in(100, 100000000), "must lie in [100, 1e8]");
  check(p.n_paths, "params.n_paths", in(1, 10000000), "must lie in [1, 1e7]");
  check(p.n_shifts, "params.n_shifts", in(100, 100000000), "must lie in [100, 1e8]");
  check(p.trials, "params.trials", in(1, 10000000), "must lie in [1, 1e7]");
  check(p.m, "params.m", in(1, 4096), "must lie in [1, 4096]");
  check(p.bins, "params.bins", in(1, 4096), "must lie in [1, 4096]");
  check(p.window, "params.window", in(2, 4096), "must lie in [2, 4096]");
  check(p.resamples, "params.resamples", in(10, 100000), "must lie in [10, 1e5]");
  check(p.s, "params.s", [](double v) { return v >= 0.0; }, "must be >= 0");
  check(p.shift, "params.shift", [](double v) { return v >= 0.0; }, "must be >= 0");
  check(p.delta, "params.delta", [](double v) { return v > 0.0; }, "must be > 0");
  check(p.atol, "params.atol", [](double v) { return v >= 0.0 && v < 0.5; }, "must lie in [0, 0.5)");
  check(p.epsilon, "params.epsilon", [](double v) { return v > 0.0 && v < 1e6; }, "must be positive");
  check(p.tol, "params.tol", [](double v) { return v >= 0.0; }, "must be >= 0");
  check(p.z_max, "params.z_max", [](double v) { return v > 0.0; }, "must be > 0");
  check(p.max_fraction, "params.max_fraction", [](double v) { return v >= 0.0 && v <= 1.0; }, "must lie in [0, 1]");
  if (p.horizons) {
    if (p.horizons->empty()) invalid("params.horizons", "must be nonempty");
    for (double t : *p.horizons)
      if (!(t > 0.0 && t <= 1e8)) invalid("params.horizons", "entries must lie in (0, 1e8]");
  }
  if (p.lags) {
    if (p.lags->empty()) invalid("params.lags", "must be nonempty");
    for (int l : *p.lags)
      if (l < 0 || l > 10000) invalid("params.lags", "entries must lie in [0, 10000]");
  }
  if (p.times) {
    if (p.times->empty() || p.times->size() > 8) invalid("params.times", "need 1..8 times");
    for (std::size_t i = 0; i < p.times->size(); ++i) {
      if ((*p.times)[i] < 0) invalid("params.times", "times must be >= 0");
      if (i > 0 && (*p.times)[i] <= (*p.times)[i - 1]) invalid("params.times", "times must be strictly increasing");
    }
  }
  if (p.method && *p.method != "auto" && *p.method != "brute-force" && *p.method != "structural")
    invalid("params.method", "expected auto, brute-force or structural");
  if (p.xi && *p.xi != "sin-noise" && *p.xi != "sin-phase" && *p.xi != "half-indicator" && *p.xi != "constant")
    invalid("params.xi", "expected sin-noise, sin-phase, half-indicator or constant");
  check(p.circle_points, "params.circle_points", [](int v) { return v >= 1 && v <= 31; }, "must lie in [1, 31]");
  check(p.q, "params.q", [](int v) { return v >= 1 && v <= 31; }, "must lie in [1, 31]");
  check(p.p, "params.p", [](int v) { return v >= 0 && v <= 31; }, "must lie in [0, 31]");
  return p;
}

Expect parse_expect(const Json& doc) {
  Reader r(doc, "expect");
  Expect e;
  e.ergodic = r.opt<bool>("ergodic");
  e.witness = r.opt<std::vector<int>>("witness");
  e.violations = r.opt<std::uint64_t>("violations");
  r.finish();
  if (e.witness)
    for (int l : *e.witness)
      if (l < 1 || l > 62) invalid("expect.witness", "entries are 1-based state labels");
  return e;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
  }) && id.front() != '.';
}

}  // namespace

const std::vector<std::string_view>& experiment_names() {
  static const std::vector<std::string_view> names{
      "noise-check", "rds-verify", "estimate-measure", "ps-ergodic", "condition-a",
      "sublinear-invariance", "sublinear-ergodic", "birkhoff-qs", "wiener-shift", "canonical-sample"};
  return names;
}

std::string_view to_string(ExperimentKind kind) { return experiment_names()[static_cast<std::size_t>(kind)]; }

ExperimentKind parse_experiment(std::string_view name) {
  const auto& names = experiment_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) invalid("experiment", "unknown experiment '" + std::string(name) + "'");
  return static_cast<ExperimentKind>(it - names.begin());
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return experiment == o.experiment && id == o.id && seed == o.seed && workers == o.workers && out_dir == o.out_dir &&
         system == o.system && params == o.params && expect == o.expect;
}

ExperimentConfig parse(const Json& doc, const std::filesystem::path& base_dir) {
  Reader r(doc, "");
  ExperimentConfig c;
  c.base_dir = base_dir;
  const auto schema = r.req<std::string>("schema");
  if (schema != kSchema) invalid("schema", "expected \"" + std::string(kSchema) + "\"");
  c.experiment = parse_experiment(r.req<std::string>("experiment"));
  c.id = r.req<std::string>("id");
  if (!valid_id(c.id)) invalid("id", "use 1..128 characters from [A-Za-z0-9._-], not starting with '.'");
  c.seed = r.req<std::uint64_t>("seed");
  const auto workers = r.opt<std::uint64_t>("workers").value_or(1);
  if (workers > 256) invalid("workers", "must lie in [0, 256]");
  c.workers = static_cast<unsigned>(workers);
  c.out_dir = r.opt<std::string>("out_dir").value_or("out");
  if (c.out_dir.empty()) invalid("out_dir", "must be nonempty");
  if (const Json* s = r.sub("system")) c.system = parse_system(*s);
  if (const Json* p = r.sub("params")) c.params = parse_params(*p);
  if (const Json* e = r.sub("expect")) c.expect = parse_expect(*e);
  r.finish();
  return c;
}

ExperimentConfig parse_text(const std::string& text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ConfigInvalid, std::string("<document>: not valid JSON: ") + e.what());
  }
  return parse(doc, base_dir);
}

ExperimentConfig load(const std::filesystem::path& path) {
  return parse_text(io::read_text(path), path.parent_path());
}

namespace {

template <class T>
void put(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

Json serialize(const ExperimentConfig& c) {
  Json doc = Json::object();
  doc["schema"] = kSchema;
  doc["experiment"] = std::string(to_string(c.experiment));
  doc["id"] = c.id;
  doc["seed"] = c.seed;
  doc["workers"] = c.workers;
  doc["out_dir"] = c.out_dir;

  Json system = Json::object();
  if (const auto& n = c.system.noise) {
    Json j{{"kind", n->kind}};
    if (n->kind == "rotation" || n->kind == "torus2") j["alpha"] = n->alpha;
    if (n->kind == "bernoulli") {
      j["symbols"] = n->symbols;
      j["window"] = n->window;
      if (!n->weights.empty()) j["weights"] = n->weights;
    }
    if (n->kind == "wiener") {
      j["mesh"] = n->mesh;
      j["horizon"] = n->horizon;
    }
    system["noise"] = j;
  }
  if (const auto& cc = c.system.cocycle) {
    Json j{{"kind", cc->kind}};
    if (cc->kind == "circle-shift") {
      j["amplitude"] = cc->amplitude;
      j["velocity"] = cc->velocity;
      j["mesh"] = cc->mesh;
    }
    if (cc->kind == "finite-map") {
      j["maps"] = cc->maps;
      if (!cc->weights.empty()) j["weights"] = cc->weights;
      j["window"] = cc->window;
    }
    if (cc->kind == "matrix") j["window"] = cc->window;
    system["cocycle"] = j;
  }
  put(system, "matrix", c.system.matrix);
  put(system, "matrix_path", c.system.matrix_path);
  put(system, "tau", c.system.tau);
  put(system, "rho0", c.system.rho0);
  put(system, "start_state", c.system.start_state);
  put(system, "offset", c.system.offset);
  if (!system.empty()) doc["system"] = system;

  const auto& p = c.params;
  Json params = Json::object();
  put(params, "n", p.n);
  put(params, "n_paths", p.n_paths);
  put(params, "n_shifts", p.n_shifts);
  put(params, "trials", p.trials);
  put(params, "m", p.m);
  put(params, "bins", p.bins);
  put(params, "window", p.window);
  put(params, "resamples", p.resamples);
  put(params, "s", p.s);
  put(params, "shift", p.shift);
  put(params, "delta", p.delta);
  put(params, "atol", p.atol);
  put(params, "epsilon", p.epsilon);
  put(params, "tol", p.tol);
  put(params, "z_max", p.z_max);
  put(params, "max_fraction", p.max_fraction);
  put(params, "target", p.target);
  put(params, "xi_constant", p.xi_constant);
  put(params, "horizons", p.horizons);
  put(params, "lags", p.lags);
  put(params, "times", p.times);
  put(params, "method", p.method);
  put(params, "xi", p.xi);
  put(params, "circle_points", p.circle_points);
  put(params, "p", p.p);
  put(params, "q", p.q);
  if (!params.empty()) doc["params"] = params;

  Json expect = Json::object();
  put(expect, "ergodic", c.expect.ergodic);
  put(expect, "witness", c.expect.witness);
  put(expect, "violations", c.expect.violations);
  if (!expect.empty()) doc["expect"] = expect;
  return doc;
}

}  // namespace ergoperiod::config
