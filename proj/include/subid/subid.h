/* C interface to the subspace identification library.
 *
 * Every function that can fail returns a subid_status; on failure the message
 * is available from subid_last_error() on the calling thread. Objects are
 * opaque and owned by the caller once created; release them with the matching
 * *_free function. Strings returned through char** are released with
 * subid_string_free. Matrices are passed row-major. */
#ifndef SUBID_SUBID_H
#define SUBID_SUBID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SUBID_BUILDING)
#    define SUBID_API __declspec(dllexport)
#  else
#    define SUBID_API __declspec(dllimport)
#  endif
#else
#  define SUBID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum subid_status {
  SUBID_OK = 0,
  SUBID_ERR_INVALID_ARGUMENT = 1,
  SUBID_ERR_UNSTABLE = 2,
  SUBID_ERR_NOT_MINIMAL = 3,
  SUBID_ERR_INSUFFICIENT_DATA = 4,
  SUBID_ERR_RANK_DEFICIENT = 5,
  SUBID_ERR_NOT_POSITIVE_DEFINITE = 6,
  SUBID_ERR_NO_CONVERGENCE = 7,
  SUBID_ERR_ORDER_AMBIGUOUS = 8,
  SUBID_ERR_SEARCH_CAP = 9,
  SUBID_ERR_PARSE = 10,
  SUBID_ERR_IO = 11,
  SUBID_ERR_OUT_OF_MEMORY = 98,
  SUBID_ERR_INTERNAL = 99
} subid_status;

typedef enum subid_weighting {
  SUBID_WEIGHTING_OKID = 0,
  SUBID_WEIGHTING_N4SID = 1,
  SUBID_WEIGHTING_MOESP = 2,
  SUBID_WEIGHTING_IVM = 3,
  SUBID_WEIGHTING_CVA = 4
} subid_weighting;

typedef enum subid_realization {
  SUBID_REALIZATION_CVA = 0,
  SUBID_REALIZATION_MOESP = 1
} subid_realization;

typedef enum subid_input_kind {
  SUBID_INPUT_WHITE = 0,
  SUBID_INPUT_COLORED = 1
} subid_input_kind;

typedef enum subid_rank_policy {
  SUBID_RANK_STRICT = 0,
  SUBID_RANK_MINIMUM_NORM = 1
} subid_rank_policy;

typedef struct subid_model subid_model;
typedef struct subid_trajectory subid_trajectory;
typedef struct subid_identification subid_identification;
typedef struct subid_bound_report subid_bound_report;
typedef struct subid_experiment subid_experiment;

SUBID_API const char* subid_version(void);
SUBID_API const char* subid_last_error(void);
SUBID_API const char* subid_status_name(subid_status status);
SUBID_API void subid_string_free(char* s);

/* Models ---------------------------------------------------------------- */

SUBID_API subid_status subid_model_create(size_t nx, size_t nu, size_t ny, const double* A,
                                          const double* B, const double* C, const double* K,
                                          const double* sigma_e_half, subid_model** out);
SUBID_API subid_status subid_model_from_armax(double a, double b, double c, double noise_variance,
                                              subid_model** out);
SUBID_API subid_status subid_model_from_json(const char* text, subid_model** out);
SUBID_API subid_status subid_model_load_json(const char* path, subid_model** out);
SUBID_API subid_status subid_model_to_json(const subid_model* m, char** out);
SUBID_API subid_status subid_model_dims(const subid_model* m, size_t* nx, size_t* nu, size_t* ny);
/* out holds count blocks of ny x nu, block-major. */
SUBID_API subid_status subid_model_markov(const subid_model* m, size_t count, double* out);
SUBID_API void subid_model_free(subid_model* m);

/* Trajectories ---------------------------------------------------------- */

/* White input uses sigma_u; colored input uses the default AR(2) filter.
 * The noise generator is seeded from seed as well. */
SUBID_API subid_status subid_simulate(const subid_model* m, size_t nbar, subid_input_kind input,
                                      double sigma_u, uint64_t seed, subid_trajectory** out);
SUBID_API subid_status subid_trajectory_load_csv(const char* path, subid_trajectory** out);
SUBID_API subid_status subid_trajectory_save_csv(const subid_trajectory* t, const char* path);
SUBID_API subid_status subid_trajectory_dims(const subid_trajectory* t, size_t* length,
                                             size_t* nu, size_t* ny);
SUBID_API void subid_trajectory_free(subid_trajectory* t);

/* Identification -------------------------------------------------------- */

typedef struct subid_identify_options {
  size_t p;
  size_t f;
  size_t order;
  subid_weighting weighting;
  subid_realization realization;
  subid_rank_policy rank_policy;
} subid_identify_options;

SUBID_API subid_identify_options subid_identify_options_default(void);
SUBID_API subid_status subid_identify(const subid_trajectory* t, const subid_identify_options* opt,
                                      subid_identification** out);
SUBID_API subid_status subid_identification_dims(const subid_identification* id, size_t* nx,
                                                 size_t* nu, size_t* ny);
/* Buffers sized nx*nx, nx*nu and ny*nx (any may be NULL). */
SUBID_API subid_status subid_identification_matrices(const subid_identification* id, double* A,
                                                     double* B, double* C);
/* re and im hold nx values each. */
SUBID_API subid_status subid_identification_eigenvalues(const subid_identification* id,
                                                        double* re, double* im);
SUBID_API subid_status subid_identification_markov(const subid_identification* id, size_t count,
                                                   double* out);
/* Writes up to capacity values; *count receives the total available. */
SUBID_API subid_status subid_identification_singular_values(const subid_identification* id,
                                                            double* out, size_t capacity,
                                                            size_t* count);
/* Oracle-mode report against a reference model (model bounds at the
 * identification horizon with i = f, plus SVD and realization checks). */
SUBID_API subid_status subid_identification_bounds(const subid_identification* id,
                                                   const subid_model* truth, double sigma_u,
                                                   double delta, subid_bound_report** out);
SUBID_API void subid_identification_free(subid_identification* id);

/* Bounds ---------------------------------------------------------------- */

typedef struct subid_bound_options {
  double sigma_u;
  size_t p;
  size_t f;
  size_t i;
  uint64_t N;
  double delta;
  double beta; /* > 0 replaces p by ceil(beta log N) */
  double c;
  double c1;
  double c2;
  double c3;
} subid_bound_options;

SUBID_API subid_bound_options subid_bound_options_default(void);
SUBID_API subid_status subid_bounds_evaluate(const subid_model* m, const subid_bound_options* opt,
                                             subid_bound_report** out);
SUBID_API subid_status subid_bound_report_text(const subid_bound_report* r, char** out);
SUBID_API subid_status subid_bound_report_csv(const subid_bound_report* r, char** out);
/* Numeric value of a report key; booleans read as 0 or 1. */
SUBID_API subid_status subid_bound_report_get(const subid_bound_report* r, const char* key,
                                              double* value);
SUBID_API void subid_bound_report_free(subid_bound_report* r);

/* Experiments ----------------------------------------------------------- */

typedef struct subid_experiment_result {
  size_t rows;
  size_t failures;
  double failure_rate;
  int threshold_exceeded;
} subid_experiment_result;

/* kind: "sweetspot", "kappa" or "poles". */
SUBID_API subid_status subid_experiment_create(const char* kind, subid_experiment** out);
SUBID_API subid_status subid_experiment_load(const char* path, subid_experiment** out);
SUBID_API subid_status subid_experiment_set(subid_experiment* e, const char* key,
                                            const char* value);
SUBID_API subid_status subid_experiment_run(const subid_experiment* e,
                                            subid_experiment_result* result);
SUBID_API void subid_experiment_free(subid_experiment* e);

SUBID_API subid_status subid_summarize(const char* trials_csv_path, const char* summary_csv_path);

#ifdef __cplusplus
}
#endif

#endif
