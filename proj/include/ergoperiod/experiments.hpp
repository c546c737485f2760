#pragma once

#include <string>
#include <vector>

#include "ergoperiod/config.hpp"
#include "ergoperiod/io.hpp"

namespace ergoperiod::experiments {

inline constexpr const char* kVersion = "0.1.0";

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunManifest {
  std::string experiment;
  std::string id;
  std::string digest;
  std::string version = kVersion;
  double wall_seconds = 0.0;
  unsigned workers = 1;
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  io::Json result;

  bool passed() const;
  /// Deterministic part: depends only on the configuration.
  io::Json result_json() const;
  io::Json manifest_json() const;
};

/// Runs the experiment and writes <out_dir>/<id>.result.json,
/// <out_dir>/<id>.manifest.json and any CSV data next to them.
/// Errors are rethrown with the module name and experiment id attached.
RunManifest run(const config::ExperimentConfig& config, bool write_files = true);

}  // namespace ergoperiod::experiments
