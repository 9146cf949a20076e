#ifndef HYPERSAC_H
#define HYPERSAC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HypersacStatus {
  HYPERSAC_STATUS_OK = 0,
  HYPERSAC_STATUS_NULL_POINTER = 1,
  HYPERSAC_STATUS_INVALID_UTF8 = 2,
  // Invalid configuration or arguments.
  HYPERSAC_STATUS_CONFIG_ERROR = 3,
  // Failure while running, including I/O.
  HYPERSAC_STATUS_RUNTIME_ERROR = 4,
  // A loss did not clear the reward baseline.
  HYPERSAC_STATUS_BASELINE_TOO_HIGH = 5,
  // Index or buffer length out of range.
  HYPERSAC_STATUS_OUT_OF_RANGE = 6,
  // Internal panic; the handle involved should be considered unusable.
  HYPERSAC_STATUS_PANIC = 7,
} HypersacStatus;

// Opaque run configuration.
typedef struct HypersacConfig HypersacConfig;

// Opaque result of one run.
typedef struct HypersacReport HypersacReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Description of the last failure on this thread, or null after a
// success. Valid until the next call into the library on this thread.
const char *hypersac_last_error(void);

// Library version as a static string.
const char *hypersac_version(void);

// Default configuration.
//
// # Safety
// `out` must be valid for writing a pointer.
enum HypersacStatus hypersac_config_default(struct HypersacConfig **out);

// Parses a JSON configuration; absent fields take their defaults.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be valid for writing
// a pointer.
enum HypersacStatus hypersac_config_from_json(const char *json, struct HypersacConfig **out);

// Serializes a configuration as JSON. Release the string with
// [`hypersac_string_free`].
//
// # Safety
// `config` must come from this library; `out` must be valid for writing a
// pointer.
enum HypersacStatus hypersac_config_to_json(const struct HypersacConfig *config, char **out);

// # Safety
// `config` must come from this library and not be used afterwards. Null
// is ignored.
void hypersac_config_free(struct HypersacConfig *config);

// # Safety
// `s` must come from this library and not be used afterwards. Null is
// ignored.
void hypersac_string_free(char *s);

// One SAC tuning run. `variant` is `full`, `sq-hpo`, `hmr-hpo` or `base`;
// null selects the configured variant.
//
// # Safety
// `config` must come from this library; `variant` must be null or a
// nul-terminated string; `out` must be valid for writing a pointer.
enum HypersacStatus hypersac_run(const struct HypersacConfig *config,
                                 const char *variant,
                                 uint64_t seed,
                                 struct HypersacReport **out);

// Random search with the configuration's evaluation budget.
//
// # Safety
// `config` must come from this library; `out` must be valid for writing a
// pointer.
enum HypersacStatus hypersac_random_search(const struct HypersacConfig *config,
                                           uint64_t seed,
                                           struct HypersacReport **out);

// # Safety
// `report` must come from this library and not be used afterwards. Null
// is ignored.
void hypersac_report_free(struct HypersacReport *report);

// # Safety
// `report` must come from this library; `out` must be writable.
enum HypersacStatus hypersac_report_episodes(const struct HypersacReport *report, size_t *out);

// # Safety
// `report` must come from this library; `out` must be writable.
enum HypersacStatus hypersac_report_evaluations(const struct HypersacReport *report, size_t *out);

// Best loss found; `OutOfRange` when nothing was evaluated.
//
// # Safety
// `report` must come from this library; `out` must be writable.
enum HypersacStatus hypersac_report_best_loss(const struct HypersacReport *report, double *out);

// Average reward of 0-based episode `index`.
//
// # Safety
// `report` must come from this library; `out` must be writable.
enum HypersacStatus hypersac_report_avg_reward(const struct HypersacReport *report,
                                               size_t index,
                                               double *out);

// Copies the best hyper-parameter vector into `buf`. `len_out` receives
// the vector's length; when `buf_len` is too small nothing is copied and
// `OutOfRange` is returned.
//
// # Safety
// `buf` must be valid for `buf_len` writes (it may be null when `buf_len`
// is 0); `len_out` must be writable.
enum HypersacStatus hypersac_report_best_lambda(const struct HypersacReport *report,
                                                double *buf,
                                                size_t buf_len,
                                                size_t *len_out);

// Writes the report's JSON-Lines metrics and summary CSV into `dir`.
//
// # Safety
// `report` must come from this library; `dir` must be a nul-terminated
// string.
enum HypersacStatus hypersac_report_write_metrics(const struct HypersacReport *report,
                                                  const char *dir);

// `1/(loss − baseline)`; `BaselineTooHigh` unless
// `loss > baseline + min_gap`.
//
// # Safety
// `out` must be writable.
enum HypersacStatus hypersac_compute_reward(double loss,
                                            double baseline,
                                            double min_gap,
                                            double *out);

// Hierarchical mixture of `base` (length `dim`) with `n_partners`
// partner rows stored row-major in `partners`, written to `out`
// (length `dim`).
//
// # Safety
// `base` and `out` must be valid for `dim` values, `partners` for
// `n_partners * dim` values.
enum HypersacStatus hypersac_mix_closed_form(const double *base,
                                             size_t dim,
                                             const double *partners,
                                             size_t n_partners,
                                             double alpha,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERSAC_H */
