// Command-line front end; talks to the library only through the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "ergoperiod/ergoperiod.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

int report_error(ergo_status status, const char* what) {
  std::cerr << "ergoperiod: " << what << " failed (" << ergo_status_string(status) << "): " << ergo_last_error()
            << "\n";
  return kExitError;
}

std::optional<unsigned> workers_from_env() {
  const char* env = std::getenv("ERGOPERIOD_WORKERS");
  if (env == nullptr || *env == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v > 256) {
    std::cerr << "ergoperiod: ignoring invalid ERGOPERIOD_WORKERS='" << env << "'\n";
    return std::nullopt;
  }
  return static_cast<unsigned>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic measures, PS-ergodicity and sublinear expectation experiments"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  bool list = false;
  bool quiet = false;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--workers", workers, "Worker threads (0: one per hardware thread)")->check(CLI::Range(0u, 256u));
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--list-experiments", list, "List experiment kinds and exit");
  app.add_flag("-q,--quiet", quiet, "Only print the final verdict");
  app.set_version_flag("--version", ergo_version());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }

  if (list) {
    for (size_t i = 0; i < ergo_experiment_count(); ++i) std::cout << ergo_experiment_name(i) << "\n";
    return kExitPass;
  }
  if (config_path.empty()) {
    std::cerr << "ergoperiod: --config is required\n" << app.help();
    return kExitError;
  }

  ergo_config* config = nullptr;
  if (ergo_status s = ergo_config_load(config_path.c_str(), &config); s != ERGO_OK) return report_error(s, "loading config");
  struct ConfigGuard {
    ergo_config* c;
    ~ConfigGuard() { ergo_config_free(c); }
  } config_guard{config};

  if (seed) ergo_config_set_seed(config, *seed);
  if (!workers) workers = workers_from_env();
  if (workers) {
    if (ergo_status s = ergo_config_set_workers(config, *workers); s != ERGO_OK) return report_error(s, "setting workers");
  }
  if (out_dir) {
    if (ergo_status s = ergo_config_set_out_dir(config, out_dir->c_str()); s != ERGO_OK) return report_error(s, "setting output");
  }

  ergo_run* run = nullptr;
  if (ergo_status s = ergo_run_experiment(config, 1, &run); s != ERGO_OK) return report_error(s, "running experiment");
  struct RunGuard {
    ergo_run* r;
    ~RunGuard() { ergo_run_free(r); }
  } run_guard{run};

  char* manifest_text = nullptr;
  if (ergo_status s = ergo_run_manifest_json(run, &manifest_text); s != ERGO_OK) return report_error(s, "reading manifest");
  const auto manifest = nlohmann::json::parse(manifest_text);
  ergo_string_free(manifest_text);

  const bool passed = ergo_run_passed(run) != 0;
  if (!quiet) {
    for (const auto& check : manifest["checks"]) {
      std::cout << (check["passed"].get<bool>() ? "PASS " : "FAIL ") << check["name"].get<std::string>();
      const auto detail = check["detail"].get<std::string>();
      if (!detail.empty()) std::cout << "  (" << detail << ")";
      std::cout << "\n";
    }
  }
  std::cout << manifest["experiment"].get<std::string>() << " '" << manifest["id"].get<std::string>() << "': "
            << (passed ? "all checks passed" : "some checks failed") << " [digest "
            << manifest["config_digest"].get<std::string>() << "]\n";
  return passed ? kExitPass : kExitCheckFailed;
}
