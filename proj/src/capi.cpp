#include "ergoperiod/ergoperiod.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "ergoperiod/config.hpp"
#include "ergoperiod/error.hpp"
#include "ergoperiod/experiments.hpp"
#include "ergoperiod/markov.hpp"
#include "ergoperiod/sublinear.hpp"

struct ergo_config {
  ergoperiod::config::ExperimentConfig value;
};

struct ergo_run {
  ergoperiod::experiments::RunManifest value;
};

struct ergo_matrix {
  ergoperiod::markov::StochasticMatrix value;
};

namespace {

thread_local std::string last_error;

ergo_status status_of(ergoperiod::ErrorCode code) {
  using ergoperiod::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return ERGO_INVALID_ARGUMENT;
    case ErrorCode::ConfigInvalid: return ERGO_CONFIG_INVALID;
    case ErrorCode::NonCommensurateTime: return ERGO_NON_COMMENSURATE_TIME;
    case ErrorCode::HorizonExceeded: return ERGO_HORIZON_EXCEEDED;
    case ErrorCode::PartitionMismatch: return ERGO_PARTITION_MISMATCH;
    case ErrorCode::NumericalDegeneracy: return ERGO_NUMERICAL_DEGENERACY;
    case ErrorCode::StateSpaceTooLarge: return ERGO_STATE_SPACE_TOO_LARGE;
    case ErrorCode::NotInvariant: return ERGO_NOT_INVARIANT;
    case ErrorCode::SetNotRepresentable: return ERGO_SET_NOT_REPRESENTABLE;
    case ErrorCode::GridIncommensurate: return ERGO_GRID_INCOMMENSURATE;
    case ErrorCode::IoError: return ERGO_IO_ERROR;
  }
  return ERGO_INTERNAL;
}

template <class Fn>
ergo_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return ERGO_OK;
  } catch (const ergoperiod::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return ERGO_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return ERGO_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (p == nullptr) ergoperiod::fail(ergoperiod::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

ergoperiod::markov::DiscretePeriodicMeasure measure_from(const ergo_matrix* m, int tau, const double* rho0) {
  need(m, "matrix");
  need(rho0, "rho0");
  const auto& p = m->value;
  return ergoperiod::markov::DiscretePeriodicMeasure::from_initial(p, tau, std::vector<double>(rho0, rho0 + p.size()));
}

}  // namespace

extern "C" {

const char* ergo_version(void) { return ergoperiod::experiments::kVersion; }

const char* ergo_status_string(ergo_status status) {
  switch (status) {
    case ERGO_OK: return "ok";
    case ERGO_INVALID_ARGUMENT: return "InvalidArgument";
    case ERGO_CONFIG_INVALID: return "ConfigInvalid";
    case ERGO_NON_COMMENSURATE_TIME: return "NonCommensurateTime";
    case ERGO_HORIZON_EXCEEDED: return "HorizonExceeded";
    case ERGO_PARTITION_MISMATCH: return "PartitionMismatch";
    case ERGO_NUMERICAL_DEGENERACY: return "NumericalDegeneracy";
    case ERGO_STATE_SPACE_TOO_LARGE: return "StateSpaceTooLarge";
    case ERGO_NOT_INVARIANT: return "NotInvariant";
    case ERGO_SET_NOT_REPRESENTABLE: return "SetNotRepresentable";
    case ERGO_GRID_INCOMMENSURATE: return "GridIncommensurate";
    case ERGO_IO_ERROR: return "IoError";
    case ERGO_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* ergo_last_error(void) { return last_error.c_str(); }

void ergo_string_free(char* s) { std::free(s); }

size_t ergo_experiment_count(void) { return ergoperiod::config::experiment_names().size(); }

const char* ergo_experiment_name(size_t index) {
  const auto& names = ergoperiod::config::experiment_names();
  return index < names.size() ? names[index].data() : nullptr;
}

ergo_status ergo_config_parse(const char* json, const char* base_dir, ergo_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    auto parsed = ergoperiod::config::parse_text(json, base_dir ? base_dir : "");
    *out = new ergo_config{std::move(parsed)};
  });
}

ergo_status ergo_config_load(const char* path, ergo_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new ergo_config{ergoperiod::config::load(path)};
  });
}

void ergo_config_free(ergo_config* config) { delete config; }

ergo_status ergo_config_set_seed(ergo_config* config, uint64_t seed) {
  return guarded([&] {
    need(config, "config");
    config->value.seed = seed;
  });
}

ergo_status ergo_config_set_workers(ergo_config* config, unsigned workers) {
  return guarded([&] {
    need(config, "config");
    if (workers > 256) ergoperiod::fail(ergoperiod::ErrorCode::ConfigInvalid, "workers: must lie in [0, 256]");
    config->value.workers = workers;
  });
}

ergo_status ergo_config_set_out_dir(ergo_config* config, const char* dir) {
  return guarded([&] {
    need(config, "config");
    need(dir, "dir");
    if (*dir == '\0') ergoperiod::fail(ergoperiod::ErrorCode::ConfigInvalid, "out_dir: must be nonempty");
    config->value.out_dir = dir;
  });
}

ergo_status ergo_config_to_json(const ergo_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = copy_string(ergoperiod::io::canonical_dump(ergoperiod::config::serialize(config->value)));
  });
}

ergo_status ergo_run_experiment(const ergo_config* config, int write_files, ergo_run** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    *out = new ergo_run{ergoperiod::experiments::run(config->value, write_files != 0)};
  });
}

int ergo_run_passed(const ergo_run* run) { return run != nullptr && run->value.passed() ? 1 : 0; }

ergo_status ergo_run_result_json(const ergo_run* run, char** out) {
  return guarded([&] {
    need(run, "run");
    need(out, "out");
    *out = copy_string(ergoperiod::io::canonical_dump(run->value.result_json()));
  });
}

ergo_status ergo_run_manifest_json(const ergo_run* run, char** out) {
  return guarded([&] {
    need(run, "run");
    need(out, "out");
    *out = copy_string(ergoperiod::io::canonical_dump(run->value.manifest_json()));
  });
}

void ergo_run_free(ergo_run* run) { delete run; }

ergo_status ergo_matrix_create(size_t n, const double* row_major, ergo_matrix** out) {
  return guarded([&] {
    need(row_major, "row_major");
    need(out, "out");
    *out = nullptr;
    *out = new ergo_matrix{ergoperiod::markov::StochasticMatrix(n, std::vector<double>(row_major, row_major + n * n))};
  });
}

void ergo_matrix_free(ergo_matrix* matrix) { delete matrix; }

ergo_status ergo_periodic_measures_json(const ergo_matrix* matrix, int tau, char** out) {
  return guarded([&] {
    need(matrix, "matrix");
    need(out, "out");
    ergoperiod::io::Json list = ergoperiod::io::Json::array();
    for (const auto& pm : ergoperiod::markov::find_periodic_measures(matrix->value, tau))
      list.push_back(ergoperiod::io::Json{{"tau", pm.tau}, {"rho", pm.rho}});
    *out = copy_string(ergoperiod::io::canonical_dump(list));
  });
}

ergo_status ergo_ps_ergodic(const ergo_matrix* matrix, int tau, const double* rho0, double atol, int* ergodic,
                            uint64_t* witness_mask) {
  return guarded([&] {
    need(ergodic, "ergodic");
    const auto pm = measure_from(matrix, tau, rho0);
    const auto verdict = ergoperiod::markov::is_ps_ergodic(matrix->value, tau, pm, atol);
    *ergodic = verdict.ergodic() ? 1 : 0;
    if (witness_mask != nullptr) {
      *witness_mask = 0;
      for (const auto& s : verdict.sections)
        if (s.witness) {
          *witness_mask = *s.witness;
          break;
        }
    }
  });
}

ergo_status ergo_upper_expectation(const ergo_matrix* matrix, int tau, const double* rho0, const double* phi,
                                   double* out) {
  return guarded([&] {
    need(phi, "phi");
    need(out, "out");
    const auto pm = measure_from(matrix, tau, rho0);
    const auto ue = ergoperiod::sublinear::UpperExpectation::from_periodic(pm);
    *out = ergoperiod::sublinear::upper_expect(ue, std::span<const double>(phi, matrix->value.size()));
  });
}

}  // extern "C"
