/* C API for the harmonizing-optimization library.
 *
 * All functions return ho_status; HO_OK means success. On failure,
 * ho_last_error() returns a thread-local description of what went wrong.
 * Objects returned through out-parameters are owned by the caller and
 * released with the matching *_free function; strings returned through
 * char** out-parameters are released with ho_string_free.
 */
#ifndef HO_H
#define HO_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ho_status {
  HO_OK = 0,
  HO_ERROR_ARGUMENT = 1,
  HO_ERROR_PARSE = 2,
  HO_ERROR_IO = 3,
  HO_ERROR_SOLVE = 4,
  HO_ERROR_INTERNAL = 5
} ho_status;

typedef struct ho_samples ho_samples;
typedef struct ho_instance ho_instance;
typedef struct ho_result ho_result;

const char* ho_version(void);
const char* ho_status_string(ho_status status);
const char* ho_last_error(void);
void ho_string_free(char* text);

/* --- sample sets ------------------------------------------------------- */
ho_status ho_samples_read_csv(const char* path, ho_samples** out);
ho_status ho_samples_write_csv(const ho_samples* samples, const char* path);
ho_status ho_samples_parse_json(const char* text, ho_samples** out);
ho_status ho_samples_to_json(const ho_samples* samples, char** out);
int ho_samples_count(const ho_samples* samples);
int ho_samples_dim(const ho_samples* samples);
void ho_samples_free(ho_samples* samples);

/* --- HO instances and solves ------------------------------------------- */
/* Instance JSON: {lambda, loss, space, samples, ambiguity}; see README. */
ho_status ho_instance_parse_json(const char* text, ho_instance** out);
ho_status ho_instance_read_json(const char* path, ho_instance** out);
/* options JSON (optional, may be NULL): {"abs_tol":..,"rel_tol":..,"max_iter":..} */
ho_status ho_instance_solve(const ho_instance* instance, const char* options_json,
                            ho_result** out);
void ho_instance_free(ho_instance* instance);

const char* ho_result_status(const ho_result* result);
double ho_result_objective(const ho_result* result);
int ho_result_decision_dim(const ho_result* result);
ho_status ho_result_decision(const ho_result* result, double* buffer, int length);
ho_status ho_result_to_json(const ho_result* result, char** out);
void ho_result_free(ho_result* result);

/* --- weight estimation (methods i-iv) ----------------------------------- */
/* Request JSON:
 *   {"method": "cross"|"gap"|"fixed"|"reduction",
 *    "instance": {...},          cross/gap: instance without lambda
 *    "folds": 5, "seed": 0, "alpha": 0.05,
 *    "grid": [..] | "range": [lo, hi], "tol": 1e-3,
 *    "m0": 25,                   fixed
 *    "m": 10, "n": 100}          reduction
 * Response JSON: {"method":.., "C":.. or "lambda":.., "fold_constants": [..],
 *                 "wall_seconds": ..}
 */
ho_status ho_estimate(const char* request_json, char** report_json);

/* --- scenario reduction -------------------------------------------------- */
/* Request JSON:
 *   {"method": "random"|"local_search"|"ho", "samples": {...}, "M": 10,
 *    "l": 1, "seed": 0, "init": "kmeans"|"random",
 *    "loss": {...}, "space": {...}}   loss/space required for "ho"
 * Response JSON: reduced set (indices, atoms, omega, lambda for "ho") plus,
 * for "ho", the ready-to-solve instance under "instance".
 */
ho_status ho_reduce(const char* request_json, char** result_json);

/* --- benchmark experiments ----------------------------------------------- */
/* config JSON mirrors the CLI flags; results land in out_dir as results.csv,
 * results.json and timings.csv. failed_cells receives the number of cells
 * with at least one non-optimal replication. */
ho_status ho_bench(const char* config_json, const char* out_dir, int* failed_cells);

#ifdef __cplusplus
}
#endif

#endif /* HO_H */
