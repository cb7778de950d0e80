/* C interface to the shift-consistent completion engine.
 *
 * All functions return sr_status; on failure sr_last_error() holds a
 * thread-local message. Handles are opaque and must be released with the
 * matching *_free function. Coordinates are 1-based, one int64 per
 * dimension.
 */
#ifndef SHIFTREC_H
#define SHIFTREC_H

#include <stdint.h>

#if defined(_WIN32)
#define SR_API __declspec(dllexport)
#elif defined(__GNUC__)
#define SR_API __attribute__((visibility("default")))
#else
#define SR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum sr_status {
    SR_OK = 0,
    SR_ERROR_CONFIG = 2,      /* bad arguments, unreadable or malformed files */
    SR_ERROR_DOMAIN = 3,      /* value-domain violation (e.g. nonpositive entry for uc) */
    SR_ERROR_CONVERGENCE = 4  /* sweep cap hit before the variance threshold */
} sr_status;

typedef struct sr_tensor sr_tensor;
typedef struct sr_completion sr_completion;
typedef struct sr_report sr_report;
typedef struct sr_eval_config sr_eval_config;

SR_API const char* sr_version(void);
SR_API const char* sr_last_error(void);

/* ---- tensors ---- */

SR_API sr_status sr_tensor_create(const int64_t* extents, int32_t ndim, sr_tensor** out);
SR_API sr_status sr_tensor_add_entry(sr_tensor* t, const int64_t* coord, double value);
SR_API sr_status sr_tensor_read_coo(const char* path, sr_tensor** out);
/* flavor: "ml100k", "ml1m", "ml10m" */
SR_API sr_status sr_tensor_read_movielens(const char* path, const char* flavor, sr_tensor** out);
SR_API sr_status sr_tensor_write_coo(const sr_tensor* t, const char* path); /* "-" = stdout */
SR_API void sr_tensor_free(sr_tensor* t);

SR_API int32_t sr_tensor_ndim(const sr_tensor* t);
SR_API int64_t sr_tensor_extent(const sr_tensor* t, int32_t dim); /* dim is 0-based */
SR_API int64_t sr_tensor_known_count(const sr_tensor* t);
SR_API sr_status sr_tensor_get(const sr_tensor* t, const int64_t* coord, int32_t* known,
                               double* value);

/* Synthetic instances; model: "additive" or "multiplicative". Pass
 * discretize=0 to skip rounding; truth_out may be NULL. */
SR_API sr_status sr_generate(const int64_t* extents, int32_t ndim, const char* model,
                             double factor_min, double factor_max, double noise_std,
                             double known_fraction, int32_t ensure_full_support,
                             int32_t discretize, double scale_min, double scale_max,
                             double scale_step, uint64_t seed, sr_tensor** masked_out,
                             sr_tensor** truth_out);

/* ---- completion ---- */

/* method: "sc" or "uc". k = 0 resolves to d-1. */
SR_API sr_status sr_complete(const sr_tensor* t, int32_t k, const char* method, double epsilon,
                             int64_t max_sweeps, sr_completion** out);
SR_API sr_status sr_completion_value(const sr_completion* c, const int64_t* coord, double* out);
SR_API int64_t sr_completion_sweeps(const sr_completion* c);
SR_API double sr_completion_last_sweep_variance(const sr_completion* c);
SR_API double sr_completion_residual(const sr_completion* c);
SR_API sr_status sr_completion_write_coo(const sr_completion* c, const char* path);
SR_API void sr_completion_free(sr_completion* c);

/* Canonical-form certificate of a tensor: max |known-entry sum| / count
 * over non-empty k-dimensional subtensors. */
SR_API sr_status sr_residual(const sr_tensor* t, int32_t k, double* out);

/* ---- audits ----
 * Each audit computes its report and sets *pass; a failed property is not an
 * sr_status error (the CLI maps pass=0 to exit code 5). Reports expose JSON
 * and, where noted, CSV. */

SR_API sr_status sr_audit_support(const sr_tensor* t, int64_t candidate_budget, int32_t* pass,
                                  sr_report** out);
SR_API sr_status sr_audit_shift_consistency(const sr_tensor* t, int32_t k, int32_t trials,
                                            uint64_t seed, double epsilon, int64_t max_sweeps,
                                            double tolerance, int32_t* pass, sr_report** out);
SR_API sr_status sr_audit_uniqueness(const sr_tensor* t, int32_t k, int32_t num_orders,
                                     uint64_t seed, double epsilon, int64_t max_sweeps,
                                     double tolerance, int64_t support_budget, int32_t* pass,
                                     sr_report** out);
/* Searches the tensor for consensus patterns along every axis and verifies
 * the completed ordering. */
SR_API sr_status sr_audit_consensus(const sr_tensor* t, double epsilon, int64_t max_sweeps,
                                    int32_t* pass, sr_report** out);
/* Plants `trials` valid patterns in random instances and verifies each. */
SR_API sr_status sr_audit_consensus_synthetic(const int64_t* extents, int32_t ndim,
                                              int32_t trials, uint64_t seed, double epsilon,
                                              int64_t max_sweeps, int32_t* pass, sr_report** out);
/* user = 0 picks the first user whose max rating is one below the observed
 * maximum. delta_mode: "auto", "add", "scale". CSV columns:
 * N,changed_user_count for N in 1..top_n_max. */
SR_API sr_status sr_audit_fairness(const sr_tensor* t, int64_t user, double delta,
                                   const char* delta_mode, const char* method, int32_t top_n_max,
                                   double epsilon, int64_t max_sweeps, double tolerance,
                                   int32_t* pass, sr_report** out);

/* ---- evaluation ---- */

SR_API sr_status sr_eval_config_create(sr_eval_config** out);
SR_API void sr_eval_config_free(sr_eval_config* cfg);
/* flavor: "coo", "ml100k", "ml1m", "ml10m" */
SR_API sr_status sr_eval_config_set_input(sr_eval_config* cfg, const char* path,
                                          const char* flavor);
SR_API sr_status sr_eval_config_set_synthetic(sr_eval_config* cfg, const int64_t* extents,
                                              int32_t ndim, const char* model, double factor_min,
                                              double factor_max, double noise_std,
                                              double known_fraction, int32_t ensure_full_support,
                                              int32_t discretize, double scale_min,
                                              double scale_max, double scale_step);
/* methods: "sc", "uc", or "both" */
SR_API sr_status sr_eval_config_set_methods(sr_eval_config* cfg, const char* methods);
SR_API sr_status sr_eval_config_set_k(sr_eval_config* cfg, int32_t k);
SR_API sr_status sr_eval_config_set_convergence(sr_eval_config* cfg, double epsilon,
                                                int64_t max_sweeps);
SR_API sr_status sr_eval_config_set_split(sr_eval_config* cfg, double test_fraction,
                                          const double* fractions, int32_t n_fractions,
                                          const uint64_t* seeds, int32_t n_seeds);
/* RMSE/MAE sweep report; CSV is byte-deterministic for a fixed config. */
SR_API sr_status sr_evaluate(const sr_eval_config* cfg, sr_report** out);

/* ---- reports ---- */

SR_API const char* sr_report_json(const sr_report* r);
SR_API const char* sr_report_csv(const sr_report* r); /* NULL if no tabular form */
SR_API void sr_report_free(sr_report* r);

#ifdef __cplusplus
}
#endif

#endif /* SHIFTREC_H */
