#ifndef QCCP_QCCP_H
#define QCCP_QCCP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(QCCP_BUILDING_LIBRARY)
#define QCCP_API __declspec(dllexport)
#else
#define QCCP_API __declspec(dllimport)
#endif
#else
#define QCCP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qccp_status {
  QCCP_OK = 0,
  QCCP_ERR_INPUT = 1,    /* malformed or inconsistent arguments */
  QCCP_ERR_DOMAIN = 2,   /* singular matrix, probability outside (0,1), ... */
  QCCP_ERR_FIT = 3,      /* EM failed on every restart */
  QCCP_ERR_SOLVE = 4,    /* optimizer produced no usable answer */
  QCCP_ERR_IO = 5,       /* file or parse failure */
  QCCP_ERR_INTERNAL = 6, /* unexpected exception */
  QCCP_ERR_NULL = 7      /* required pointer argument was NULL */
} qccp_status;

typedef struct qccp_mixture qccp_mixture;
typedef struct qccp_form qccp_form;
typedef struct qccp_problem qccp_problem;
typedef struct qccp_result qccp_result;

/* Strings returned through char** are heap-allocated; release with qccp_string_free. */
QCCP_API const char* qccp_version(void);
QCCP_API const char* qccp_last_error(void);
QCCP_API const char* qccp_status_string(qccp_status s);
QCCP_API void qccp_string_free(char* s);

/* Gaussian mixtures */
QCCP_API qccp_status qccp_mixture_from_json(const char* json, qccp_mixture** out);
QCCP_API qccp_status qccp_mixture_to_json(const qccp_mixture* mix, char** json);
QCCP_API void qccp_mixture_free(qccp_mixture* mix);
QCCP_API qccp_status qccp_mixture_dim(const qccp_mixture* mix, size_t* dim, size_t* components);
QCCP_API qccp_status qccp_mixture_density(const qccp_mixture* mix, const double* z, double* value);
/* out receives n*dim doubles, row-major */
QCCP_API qccp_status qccp_mixture_sample(const qccp_mixture* mix, size_t n, uint64_t seed, double* out);

/* config_json: {"components":K, "max_iter", "tol", "cond_bound", "seed", "n_restarts"}.
   data is row-major n x m. report_json (optional) receives the fit report. */
QCCP_API qccp_status qccp_fit(const double* data, size_t n, size_t m, const char* config_json, qccp_mixture** out,
                              char** report_json);
QCCP_API qccp_status qccp_fit_csv(const char* csv_path, const char* config_json, qccp_mixture** out,
                                  char** report_json);

/* Quadratic forms c(z) = z'Az/2 + a'z + a0 */
QCCP_API qccp_status qccp_form_from_json(const char* json, qccp_form** out);
QCCP_API void qccp_form_free(qccp_form* q);
QCCP_API qccp_status qccp_moments_json(const qccp_form* q, const qccp_mixture* mix, char** json);
QCCP_API qccp_status qccp_asymptotic_json(const qccp_form* q, const qccp_mixture* mix, char** json);
QCCP_API qccp_status qccp_asymptotic_cdf(const qccp_form* q, const qccp_mixture* mix, double z, double* value);
QCCP_API qccp_status qccp_asymptotic_quantile(const qccp_form* q, const qccp_mixture* mix, double p, double* value);
/* Condition checks, characteristic-function error and per-component rate bounds. */
QCCP_API qccp_status qccp_diagnose_json(const qccp_form* q, const qccp_mixture* mix, char** json);

/* Chance-constrained problems */
QCCP_API qccp_status qccp_problem_from_json(const char* json, qccp_problem** out);
QCCP_API qccp_status qccp_problem_to_json(const qccp_problem* p, char** json);
QCCP_API qccp_status qccp_problem_generate(int K, int n, uint64_t seed, int convex, qccp_problem** out,
                                           char** metadata_json);
QCCP_API void qccp_problem_free(qccp_problem* p);
QCCP_API qccp_status qccp_problem_size(const qccp_problem* p, size_t* n, size_t* components);
QCCP_API qccp_status qccp_chance_probability(const qccp_problem* p, const double* x, double* value);
QCCP_API qccp_status qccp_mc_feasibility(const qccp_problem* p, const double* x, size_t samples, uint64_t seed,
                                         double* probability, double* std_error);

/* options_json: {"epsilon","gap_tol","edge_tol","max_nodes","max_seconds","workers","trace","n_multistart","seed"} */
QCCP_API qccp_status qccp_solve(const qccp_problem* p, const char* options_json, qccp_result** out);
QCCP_API void qccp_result_free(qccp_result* r);
QCCP_API qccp_status qccp_result_json(const qccp_result* r, int include_trace, char** json);
/* status: 0 optimal, 1 infeasible, 2 iteration limit */
QCCP_API qccp_status qccp_result_status(const qccp_result* r, int* status);
QCCP_API qccp_status qccp_result_value(const qccp_result* r, double* value);
/* x must hold n doubles */
QCCP_API qccp_status qccp_result_x(const qccp_result* r, double* x, size_t n);
QCCP_API qccp_status qccp_result_nodes(const qccp_result* r, size_t* nodes);

/* Experiments: ids chisq-asymptotics, gmd-asymptotics, condnum-fit, bb-benchmark */
QCCP_API qccp_status qccp_run_experiment(const char* id, const char* config_json, const char* out_dir,
                                         char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
