/* relclock C API. Every function returns a status code; on failure the
 * message is available from relclock_last_error() on the calling thread.
 * Handles are opaque and owned by the caller (free with the matching
 * *_free function; freeing NULL is a no-op). */
#ifndef RELCLOCK_H
#define RELCLOCK_H

#include <stddef.h>
#include <stdint.h>

#if defined(RELCLOCK_BUILDING)
#define RELCLOCK_API __attribute__((visibility("default")))
#else
#define RELCLOCK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum relclock_status {
  RELCLOCK_OK = 0,
  RELCLOCK_ERR_DOMAIN = 1,
  RELCLOCK_ERR_RANGE = 2,
  RELCLOCK_ERR_ACCURACY = 3,
  RELCLOCK_ERR_POSITIVITY = 4,
  RELCLOCK_ERR_UNSUPPORTED = 5,
  RELCLOCK_ERR_CONSTRUCTION = 6,
  RELCLOCK_ERR_STEPSIZE = 7,
  RELCLOCK_ERR_PARSE = 8,
  RELCLOCK_ERR_IO = 9,
  RELCLOCK_ERR_NULL_ARG = 10,
  RELCLOCK_ERR_INTERNAL = 11
} relclock_status;

typedef struct relclock_config relclock_config;
typedef struct relclock_kernel relclock_kernel;
typedef struct relclock_model relclock_model;

/* Bath parameters. beta = INFINITY selects the vacuum. */
typedef struct relclock_environment {
  double mass_E;
  double coupling_g;
  double beta;
  double rapidity;
} relclock_environment;

RELCLOCK_API const char* relclock_last_error(void);
RELCLOCK_API const char* relclock_version(void);
RELCLOCK_API const char* relclock_status_name(relclock_status s);

/* Scenario configs. */
RELCLOCK_API relclock_status relclock_config_parse(const char* text, relclock_config** out);
RELCLOCK_API relclock_status relclock_config_load(const char* path, relclock_config** out);
RELCLOCK_API void relclock_config_free(relclock_config* c);
RELCLOCK_API relclock_status relclock_config_set_seed(relclock_config* c, uint64_t seed);
/* The returned strings live as long as the handle. */
RELCLOCK_API relclock_status relclock_config_scenario(const relclock_config* c, const char** out);
RELCLOCK_API relclock_status relclock_config_hash(relclock_config* c, const char** out);
/* Runs the scenario. output_dir may be NULL (use the config's). exit_code is
 * 0 on success, 2 when a check failed, 1 on error; the status is RELCLOCK_OK
 * whenever the artifacts were produced. */
RELCLOCK_API relclock_status relclock_run_scenario(const relclock_config* c, const char* output_dir, int quiet,
                                                   int* exit_code);

/* Special functions. */
RELCLOCK_API relclock_status relclock_dawson(double z, double* out);
RELCLOCK_API relclock_status relclock_bose_occupation(double energy, double beta, double* out);

/* Clock kernels and rate densities. */
RELCLOCK_API relclock_status relclock_kernel_gaussian(double sigma, relclock_kernel** out);
RELCLOCK_API relclock_status relclock_kernel_coherent(double amplitude, double omega_c, relclock_kernel** out);
RELCLOCK_API void relclock_kernel_free(relclock_kernel* k);
RELCLOCK_API relclock_status relclock_kappa_markov(const relclock_environment* env, double omega, double* out);
RELCLOCK_API relclock_status relclock_kappa_tcl(const relclock_environment* env, const relclock_kernel* k,
                                                double omega, double* out);

/* GKLS models read from the text model format. Density matrices are dim*dim
 * complex numbers, row-major, as interleaved (re, im) doubles. */
RELCLOCK_API relclock_status relclock_model_load(const char* path, relclock_model** out);
RELCLOCK_API void relclock_model_free(relclock_model* m);
RELCLOCK_API relclock_status relclock_model_dim(const relclock_model* m, size_t* out);
RELCLOCK_API relclock_status relclock_model_evolve(const relclock_model* m, const double* rho0, double t,
                                                   double* rho_out);
RELCLOCK_API relclock_status relclock_model_cp_check(const relclock_model* m, double dt, int* completely_positive,
                                                     double* min_choi_eigenvalue);

/* Scalar classical-quantum trade-off 2 d2 - d1^2 / d0 (with the range
 * condition). verdict: 0 satisfied, 1 violated, 2 range violation. */
RELCLOCK_API relclock_status relclock_tradeoff_scalar(double d0, double d1, double d2, double* margin, int* verdict);

#ifdef __cplusplus
}
#endif

#endif
