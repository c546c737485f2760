#ifndef ERGOPERIOD_ERGOPERIOD_H
#define ERGOPERIOD_ERGOPERIOD_H

/* C interface to the ergoperiod library. Every function returns an
 * ergo_status; on failure ergo_last_error() describes the problem for the
 * calling thread. Strings returned through out-parameters are owned by the
 * caller and released with ergo_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(ERGO_BUILDING_LIBRARY)
#define ERGO_API __attribute__((visibility("default")))
#else
#define ERGO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ergo_status {
  ERGO_OK = 0,
  ERGO_INVALID_ARGUMENT = 1,
  ERGO_CONFIG_INVALID = 2,
  ERGO_NON_COMMENSURATE_TIME = 3,
  ERGO_HORIZON_EXCEEDED = 4,
  ERGO_PARTITION_MISMATCH = 5,
  ERGO_NUMERICAL_DEGENERACY = 6,
  ERGO_STATE_SPACE_TOO_LARGE = 7,
  ERGO_NOT_INVARIANT = 8,
  ERGO_SET_NOT_REPRESENTABLE = 9,
  ERGO_GRID_INCOMMENSURATE = 10,
  ERGO_IO_ERROR = 11,
  ERGO_INTERNAL = 99
} ergo_status;

typedef struct ergo_config ergo_config;
typedef struct ergo_run ergo_run;
typedef struct ergo_matrix ergo_matrix;

ERGO_API const char* ergo_version(void);
ERGO_API const char* ergo_status_string(ergo_status status);
/* Message of the last failure on this thread; empty after success. */
ERGO_API const char* ergo_last_error(void);
ERGO_API void ergo_string_free(char* s);

ERGO_API size_t ergo_experiment_count(void);
ERGO_API const char* ergo_experiment_name(size_t index);

/* Relative paths inside the document resolve against base_dir (may be NULL). */
ERGO_API ergo_status ergo_config_parse(const char* json, const char* base_dir, ergo_config** out);
ERGO_API ergo_status ergo_config_load(const char* path, ergo_config** out);
ERGO_API void ergo_config_free(ergo_config* config);
ERGO_API ergo_status ergo_config_set_seed(ergo_config* config, uint64_t seed);
/* 0 selects one worker per hardware thread. */
ERGO_API ergo_status ergo_config_set_workers(ergo_config* config, unsigned workers);
ERGO_API ergo_status ergo_config_set_out_dir(ergo_config* config, const char* dir);
/* Canonical JSON form of the configuration. */
ERGO_API ergo_status ergo_config_to_json(const ergo_config* config, char** out);

/* Runs the experiment; write_files = 0 keeps everything in memory. */
ERGO_API ergo_status ergo_run_experiment(const ergo_config* config, int write_files, ergo_run** out);
ERGO_API int ergo_run_passed(const ergo_run* run);
ERGO_API ergo_status ergo_run_result_json(const ergo_run* run, char** out);
ERGO_API ergo_status ergo_run_manifest_json(const ergo_run* run, char** out);
ERGO_API void ergo_run_free(ergo_run* run);

/* Row-major n x n stochastic matrix. */
ERGO_API ergo_status ergo_matrix_create(size_t n, const double* row_major, ergo_matrix** out);
ERGO_API void ergo_matrix_free(ergo_matrix* matrix);
/* JSON list of extremal periodic measures of period tau. */
ERGO_API ergo_status ergo_periodic_measures_json(const ergo_matrix* matrix, int tau, char** out);
/* PS-ergodicity of the periodic measure generated by rho0 (length n).
 * witness_mask is 0 when ergodic; bit i stands for state i+1. */
ERGO_API ergo_status ergo_ps_ergodic(const ergo_matrix* matrix, int tau, const double* rho0, double atol,
                                     int* ergodic, uint64_t* witness_mask);
/* max_k rho_k . phi over the periodic measure generated by rho0. */
ERGO_API ergo_status ergo_upper_expectation(const ergo_matrix* matrix, int tau, const double* rho0,
                                            const double* phi, double* out);

#ifdef __cplusplus
}
#endif

#endif
