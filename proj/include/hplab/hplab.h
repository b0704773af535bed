#ifndef HPLAB_H
#define HPLAB_H

/* C interface to the hp-lab experiment runner.
 *
 * Every function returns an hplab_status; on failure a message for the
 * calling thread is available from hplab_last_error() until the next call
 * on that thread. Strings returned through char** are owned by the caller
 * and released with hplab_string_free. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HPLAB_API __declspec(dllexport)
#else
#define HPLAB_API __attribute__((visibility("default")))
#endif

typedef enum hplab_status {
  HPLAB_OK = 0,
  HPLAB_CONVERGENCE_FAILURE = 1,
  HPLAB_NEGATIVE_EIGENVALUE = 2,
  HPLAB_SINGULAR_MATRIX = 3,
  HPLAB_INVALID_STEP = 4,
  HPLAB_OVERFLOW = 5,
  HPLAB_COLLISION_ABORT = 6,
  HPLAB_TAIL_NOT_CONVERGED = 7,
  HPLAB_NORMALIZATION_FAILURE = 8,
  HPLAB_INSUFFICIENT_SAMPLE = 9,
  HPLAB_INSUFFICIENT_HORIZON = 10,
  HPLAB_CONFIG_ERROR = 11,
  HPLAB_IO_ERROR = 12,
  HPLAB_INVALID_ARGUMENT = 13,
  HPLAB_INTERNAL_ERROR = 14
} hplab_status;

typedef struct hplab_config hplab_config;
typedef struct hplab_run hplab_run;

typedef struct hplab_report {
  const char* name; /* owned by the run */
  const char* kind;
  double statistic;
  double p_value; /* NaN when the criterion is not a probability */
  double threshold;
  size_t n1;
  size_t n2;
  int passed;
} hplab_report;

HPLAB_API const char* hplab_version(void);
HPLAB_API const char* hplab_last_error(void);
HPLAB_API const char* hplab_status_name(hplab_status status);
/* Process exit code for a failed call: 3 for numerical failures, 2 otherwise. */
HPLAB_API int hplab_status_exit_code(hplab_status status);
HPLAB_API void hplab_string_free(char* s);

/* Config from a key=value file (or text) plus `count` overrides "key=value". */
HPLAB_API hplab_status hplab_config_load(const char* path, const char* const* overrides, size_t count,
                                         hplab_config** out);
HPLAB_API hplab_status hplab_config_parse(const char* text, const char* const* overrides, size_t count,
                                          hplab_config** out);
HPLAB_API hplab_status hplab_config_defaults(const char* experiment, hplab_config** out);
HPLAB_API hplab_status hplab_config_set(hplab_config* config, const char* key, const char* value);
HPLAB_API hplab_status hplab_config_get(const hplab_config* config, const char* key, char** value);
HPLAB_API hplab_status hplab_config_to_text(const hplab_config* config, char** text);
HPLAB_API hplab_status hplab_config_validate(const hplab_config* config);
HPLAB_API void hplab_config_free(hplab_config* config);

HPLAB_API hplab_status hplab_run_experiment(const hplab_config* config, hplab_run** out);
HPLAB_API size_t hplab_run_report_count(const hplab_run* run);
HPLAB_API hplab_status hplab_run_report(const hplab_run* run, size_t index, hplab_report* out);
/* 1 if every report passed. */
HPLAB_API int hplab_run_passed(const hplab_run* run);
HPLAB_API size_t hplab_run_flagged_count(const hplab_run* run);
HPLAB_API double hplab_run_wall_seconds(const hplab_run* run);
/* Writes reports.json, samples.csv, paths.csv, manifest.json into `dir`
 * (the config's out_dir when NULL); the manifest text is returned if
 * `manifest_json` is not NULL. */
HPLAB_API hplab_status hplab_run_write(const hplab_run* run, const char* dir, char** manifest_json);
HPLAB_API void hplab_run_free(hplab_run* run);

/* Reruns a manifest into `dir`; *identical is 1 iff every digest matches.
 * `mismatched`, if not NULL, receives a comma-separated list of files. */
HPLAB_API hplab_status hplab_replay(const char* manifest_path, const char* dir, int* identical, char** mismatched);

/* Human-readable table, or JSON when `as_json` is nonzero. */
HPLAB_API hplab_status hplab_list_experiments(int as_json, char** out);

/* Normalized one-dimensional density m_s^(N) and its CDF at `count` points. */
HPLAB_API hplab_status hplab_density_eval(int n, double s_re, double s_im, const double* x, size_t count, double* pdf,
                                          double* cdf);

#ifdef __cplusplus
}
#endif

#endif /* HPLAB_H */
