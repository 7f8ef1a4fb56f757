/* C interface to the dirsmooth library.
 *
 * Every call returns a status code (DS_OK on success). On failure the
 * message is available from ds_last_error() on the calling thread until the
 * next failing call. Handles are opaque and must be released with the
 * matching *_free function; strings returned through char** must be released
 * with ds_string_free. Objective, reference and trace handles are immutable
 * after creation and may be shared across threads.
 */
#ifndef DIRSMOOTH_C_API_H
#define DIRSMOOTH_C_API_H

#include <stddef.h>

#if defined(DIRSMOOTH_BUILDING)
#define DS_API __attribute__((visibility("default")))
#else
#define DS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ds_status {
  DS_OK = 0,
  DS_INVALID_ARGUMENT = 1,
  DS_DIMENSION_MISMATCH = 2,
  DS_UNSUPPORTED = 3,
  DS_COINCIDENT_POINTS = 4,
  DS_RAY_MINIMIZATION = 5,
  DS_NOT_CONVERGED = 6,
  DS_NO_MINIMIZER = 7,
  DS_PARSE_ERROR = 8,
  DS_HYPOTHESIS_FAILED = 9,
  DS_MISSING_METRICS = 10,
  DS_IO_ERROR = 11,
  DS_NUMERICAL_FAILURE = 12,
  DS_INTERNAL = 100
} ds_status;

typedef struct ds_objective ds_objective;
typedef struct ds_reference ds_reference;
typedef struct ds_trace ds_trace;
typedef struct ds_bound ds_bound;
typedef struct ds_expsearch ds_expsearch;

/* Scalars of one trace record; NaN marks metrics that were not recorded. */
typedef struct ds_record {
  int k;
  double f;
  double grad_norm;
  double eta;
  double D;
  double A;
  double H;
  double mu_star;
} ds_record;

typedef struct ds_dominance {
  int ok;
  double max_violation;
  int index;
  int checked;
} ds_dominance;

DS_API const char* ds_version(void);
DS_API const char* ds_last_error(void);
DS_API const char* ds_status_name(int status);
DS_API void ds_string_free(char* s);

/* Objectives.
 * {"type": "power_law_quadratic", "d": 50, "alpha": 3, "L": 1000, "seed": 1, "rotate": true}
 * {"type": "quadratic", "B": [[...]] | "diag": [...], "c": [...]}
 * {"type": "synthetic_logistic", "n": 200, "d": 10, "seed": 7}
 * {"type": "logistic", "A": [[...]], "y": [...]}
 * {"type": "dataset", "path": "...", "bias": false, "standardize": false,
 *  "train_fraction": 1.0, "split_seed": 0}
 */
DS_API int ds_objective_create(const char* spec_json, ds_objective** out);
DS_API void ds_objective_free(ds_objective* obj);
DS_API int ds_objective_dim(const ds_objective* obj, size_t* out);
DS_API int ds_objective_tag(const ds_objective* obj, char** out);
DS_API int ds_objective_value(const ds_objective* obj, const double* x, size_t n, double* out);
DS_API int ds_objective_gradient(const ds_objective* obj, const double* x, size_t n, double* out);
DS_API int ds_objective_hvp(const ds_objective* obj, const double* x, const double* v, size_t n, double* out);
DS_API int ds_objective_smoothness_constant(const ds_objective* obj, double* out);

/* Directional smoothness between x and y; kind is "D", "A", "H" or "L". */
DS_API int ds_smoothness(const ds_objective* obj, const char* kind, const double* x, const double* y, size_t n,
                         double* out);
DS_API int ds_directional_mu(const ds_objective* obj, const double* x, const double* y, size_t n, double* out);

/* Step size of a rule such as {"rule": "adapted", "kind": "D"} at x with iteration index k. */
DS_API int ds_step_size(const ds_objective* obj, const char* rule_json, const double* x, size_t n, int k,
                        double* out);

/* Reference optimum. */
DS_API int ds_reference_compute(const ds_objective* obj, double tol, int max_iters, ds_reference** out);
DS_API int ds_reference_from_json(const char* json, ds_reference** out);
DS_API int ds_reference_to_json(const ds_reference* ref, char** out);
DS_API int ds_reference_f_star(const ds_reference* ref, double* out);
DS_API void ds_reference_free(ds_reference* ref);

/* Optimizer runs.
 * {"algorithm": "gd", "rule": {...}, "iters": 100, "x0": [...],
 *  "pair_metrics": true, "skip_path_wise": false, "grad_tol": 0, "thin": false, "seed": 0}
 * {"algorithm": "normalized_gd", "schedule": "anytime", "eta0": 1, "K": 0, ...}
 * {"algorithm": "agd_momentum", "mu": 0, "alpha0": 0.5, "steps": {"source": "constant", "eta": 0.01}, ...}
 * {"algorithm": "agd_estimating", "mu": 0, "gamma0": 1, "steps": {...}, ...}
 * Step sources: constant(eta), inverse_L, adapted(kind), sequence(etas).
 * x0 defaults to the origin. `ref` may be NULL; when given it supplies a
 * missing Polyak f_star and, unless "mu_star" is false, mu(x_k, x*) metrics.
 */
DS_API int ds_run(const ds_objective* obj, const char* run_json, const ds_reference* ref, ds_trace** out);
/* Checks a run description without an objective (keys, names, parameter ranges). */
DS_API int ds_run_validate(const char* run_json);
DS_API void ds_trace_free(ds_trace* trace);
DS_API int ds_trace_length(const ds_trace* trace, size_t* out);
DS_API int ds_trace_record(const ds_trace* trace, size_t k, ds_record* out);
DS_API int ds_trace_iterate(const ds_trace* trace, size_t k, double* out, size_t n);
DS_API int ds_trace_csv(const ds_trace* trace, char** out);
DS_API int ds_trace_to_json(const ds_trace* trace, char** out);
DS_API int ds_trace_meta_json(const ds_trace* trace, char** out);
DS_API int ds_trace_from_json(const char* json, ds_trace** out);

/* Bounds. {"bound": "polyak", "M": "H", "gamma": 1.5}; names: sc_split, sc_iterates,
 * convex_avg, agd, polyak, polyak_alternate, ngd, classic_L. Extra keys:
 * "product_range" ("before_k" | "through_k"), "offset" ("verbatim" | "path_max"),
 * "L", "flavor" ("gd" | "polyak"). */
DS_API int ds_bound_evaluate(const ds_objective* obj, const ds_trace* trace, const ds_reference* ref,
                             const char* selection_json, ds_bound** out);
DS_API int ds_bound_validate(const char* selection_json);
DS_API void ds_bound_free(ds_bound* bound);
DS_API int ds_bound_length(const ds_bound* bound, size_t* out);
DS_API int ds_bound_values(const ds_bound* bound, double* out, size_t n);
DS_API int ds_bound_dominance(const ds_bound* bound, double rel_tol, ds_dominance* out);
DS_API int ds_bound_csv(const ds_bound* bound, char** out);
DS_API int ds_bound_name(const ds_bound* bound, char** out);

/* Exponential search. {"eta0": 0.1, "K": 200, "kind": "D", "x0": [...], "pair_metrics": false} */
DS_API int ds_expsearch_run(const ds_objective* obj, const char* json, ds_expsearch** out);
DS_API void ds_expsearch_free(ds_expsearch* es);
/* {"case", "eta", "eta0", "K", "inner_gd_steps", "budget", "eta_hi", "phi", "probes": [...]} */
DS_API int ds_expsearch_summary(const ds_objective* obj, const ds_expsearch* es, char** out);
DS_API int ds_expsearch_trace(const ds_expsearch* es, ds_trace** out);
DS_API int ds_expsearch_bound(const ds_objective* obj, const ds_expsearch* es, const ds_reference* ref,
                              ds_bound** out);

#ifdef __cplusplus
}
#endif

#endif /* DIRSMOOTH_C_API_H */
