/* C interface to the redcal library. All functions return a status code;
 * on failure redcal_last_error() describes the problem (thread-local). */
#ifndef REDCAL_REDCAL_H
#define REDCAL_REDCAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(REDCAL_BUILDING_LIBRARY)
#define REDCAL_API __attribute__((visibility("default")))
#else
#define REDCAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum redcal_status {
  REDCAL_OK = 0,
  REDCAL_E_INVALID_ARGUMENT = 1,
  REDCAL_E_IO = 2,
  REDCAL_E_PARSE = 3,
  REDCAL_E_NUMERIC = 4,
  REDCAL_E_MISSING_ARTIFACT = 5,
  REDCAL_E_INTERNAL = 6
} redcal_status;

typedef struct redcal_config redcal_config;
typedef struct redcal_gp redcal_gp;

REDCAL_API const char* redcal_version(void);
REDCAL_API const char* redcal_last_error(void);
REDCAL_API const char* redcal_status_name(redcal_status s);

/* Run configuration. */
REDCAL_API redcal_status redcal_config_create(redcal_config** out);
REDCAL_API void redcal_config_destroy(redcal_config* c);
REDCAL_API redcal_status redcal_config_load(redcal_config* c, const char* path);
/* key is "section.key" or a bare key that is unique across sections. */
REDCAL_API redcal_status redcal_config_set(redcal_config* c, const char* key, const char* value);
/* Copies a NUL-terminated value into buf; *needed receives the full size
 * including the terminator so callers can retry with a larger buffer. A null
 * buf only reports the size. */
REDCAL_API redcal_status redcal_config_get(const redcal_config* c, const char* key, char* buf, size_t len,
                                           size_t* needed);
REDCAL_API redcal_status redcal_config_to_text(const redcal_config* c, char* buf, size_t len, size_t* needed);
REDCAL_API redcal_status redcal_config_validate(const redcal_config* c);

/* Pipeline: simulate, reduce, fit-emulator, loo-check, calibrate, project, summarize. */
REDCAL_API redcal_status redcal_run_command(const redcal_config* c, const char* command, const char* run_dir);

/* Single-output Gaussian process on [0,1]^4 inputs. design is row-major n x 4. */
REDCAL_API redcal_status redcal_gp_fit(const double* design, size_t n, const double* y, int restarts, uint64_t seed,
                                       redcal_gp** out);
REDCAL_API void redcal_gp_destroy(redcal_gp* gp);
REDCAL_API redcal_status redcal_gp_predict(const redcal_gp* gp, const double theta[4], double* mean,
                                           double* variance);
REDCAL_API redcal_status redcal_gp_hyperparameters(const redcal_gp* gp, double phi[4], double* kappa,
                                                   double* zeta);
REDCAL_API redcal_status redcal_gp_neg_log_likelihood(const redcal_gp* gp, double* out);

/* Utilities. */
REDCAL_API redcal_status redcal_mcse(const double* x, size_t n, double* out);
REDCAL_API redcal_status redcal_forward_series(const double theta[4], const double* times, size_t n, double* out);
REDCAL_API redcal_status redcal_forecast_change(const double theta[4], double t, double* out);

#ifdef __cplusplus
}
#endif

#endif
