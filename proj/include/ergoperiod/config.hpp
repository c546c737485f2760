#pragma once

// Experiment configuration: a JSON document with schema "ergoperiod/1".
// Unknown keys are rejected at every level; every knob is range-checked.

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ergoperiod/io.hpp"

namespace ergoperiod::config {

inline constexpr const char* kSchema = "ergoperiod/1";

enum class ExperimentKind {
  NoiseCheck,
  RdsVerify,
  EstimateMeasure,
  PsErgodic,
  ConditionA,
  SublinearInvariance,
  SublinearErgodic,
  BirkhoffQs,
  WienerShift,
  CanonicalSample,
};

const std::vector<std::string_view>& experiment_names();
std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment(std::string_view name);

struct NoiseSpec {
  std::string kind = "torus2";  // rotation | torus2 | bernoulli | wiener
  double alpha = std::numbers::sqrt2 - 1.0;
  int symbols = 2;
  int window = 8;
  std::vector<double> weights;
  double mesh = 0.01;
  double horizon = 1.0;
  bool operator==(const NoiseSpec&) const = default;
};

struct CocycleSpec {
  std::string kind = "circle-shift";  // circle-shift | finite-map | matrix
  double amplitude = 0.1;
  double velocity = 1.0;
  double mesh = 0.0;
  std::vector<std::vector<int>> maps;  // 1-based images, one map per symbol
  std::vector<double> weights;
  int window = 8;
  bool operator==(const CocycleSpec&) const = default;
};

struct SystemSpec {
  std::optional<NoiseSpec> noise;
  std::optional<CocycleSpec> cocycle;
  std::optional<std::vector<std::vector<double>>> matrix;
  std::optional<std::string> matrix_path;
  std::optional<double> tau;
  std::optional<std::vector<double>> rho0;
  std::optional<int> start_state;  // 1-based
  std::optional<double> offset;
  bool operator==(const SystemSpec&) const = default;
};

struct Params {
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> n_paths;
  std::optional<std::uint64_t> n_shifts;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> m;
  std::optional<std::uint64_t> bins;
  std::optional<std::uint64_t> window;
  std::optional<std::uint64_t> resamples;
  std::optional<double> s;
  std::optional<double> shift;
  std::optional<double> delta;
  std::optional<double> atol;
  std::optional<double> epsilon;
  std::optional<double> tol;
  std::optional<double> z_max;
  std::optional<double> max_fraction;
  std::optional<double> target;
  std::optional<double> xi_constant;
  std::optional<std::vector<double>> horizons;
  std::optional<std::vector<int>> lags;
  std::optional<std::vector<int>> times;
  std::optional<std::string> method;  // auto | brute-force | structural
  std::optional<std::string> xi;      // sin-noise | sin-phase | half-indicator | constant
  std::optional<int> circle_points;
  std::optional<int> p;
  std::optional<int> q;
  bool operator==(const Params&) const = default;
};

struct Expect {
  std::optional<bool> ergodic;
  std::optional<std::vector<int>> witness;  // 1-based labels
  std::optional<std::uint64_t> violations;
  bool operator==(const Expect&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::NoiseCheck;
  std::string id;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out_dir = "out";
  SystemSpec system;
  Params params;
  Expect expect;
  /// Directory relative paths in the document resolve against.
  std::filesystem::path base_dir;

  /// Ignores base_dir.
  bool operator==(const ExperimentConfig& other) const;
};

/// Throws ConfigInvalid naming the offending key.
ExperimentConfig parse(const io::Json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig parse_text(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load(const std::filesystem::path& path);

io::Json serialize(const ExperimentConfig& config);

}  // namespace ergoperiod::config
