/*
 * C API for the distributed multichannel ANC simulation library.
 *
 * All functions return dmc_status (or a handle, NULL on failure); the
 * message for the most recent failure on the calling thread is available
 * through dmc_last_error(). Handles are opaque and must be released with
 * the matching destroy call.
 */
#ifndef DMCANC_H
#define DMCANC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dmc_status {
    DMC_OK = 0,
    DMC_ERR_CONFIG = 2,     /* invalid or inconsistent configuration */
    DMC_ERR_DIVERGENCE = 3, /* an adaptive loop blew up */
    DMC_ERR_ARGUMENT = 4,   /* bad argument to an operation */
    DMC_ERR_IO = 5,         /* file read/write/parse failure */
    DMC_ERR_INTERNAL = 6
} dmc_status;

const char* dmc_version(void);
const char* dmc_last_error(void);

/* --- experiment configuration ------------------------------------------ */

typedef struct dmc_config dmc_config;

dmc_config* dmc_config_create(void);
dmc_config* dmc_config_create_profile(const char* name); /* "paper" | "ci" */
dmc_config* dmc_config_load(const char* path);
void dmc_config_destroy(dmc_config* cfg);

dmc_status dmc_config_set(dmc_config* cfg, const char* key, const char* value);
dmc_status dmc_config_get(const dmc_config* cfg, const char* key, char* buf, size_t buf_len);
dmc_status dmc_config_validate(const dmc_config* cfg);

/* --- experiment commands -------------------------------------------------
 * Each command writes its outputs under out_dir:
 *   paths       plant/primary_<k>.txt, plant/secondary_<k>_<m>.txt, manifest
 *   compensate  compensation/comp_<k>_<m>.txt + manifest with residuals
 *   experiment  mse.csv, weights/, staleness.csv
 *   compare     mse_compare.csv, spectra.csv
 *   sweep       sweep.csv
 *   check       check.txt; worst deviation also returned through the pointer
 */

dmc_status dmc_run_paths(const dmc_config* cfg, const char* out_dir);
dmc_status dmc_run_compensate(const dmc_config* cfg, const char* out_dir);
dmc_status dmc_run_experiment(const dmc_config* cfg, const char* out_dir);
dmc_status dmc_run_compare(const dmc_config* cfg, const char* out_dir);
dmc_status dmc_run_sweep(const dmc_config* cfg, const char* axis, const double* points,
                         size_t n_points, const char* out_dir);
dmc_status dmc_run_check(const dmc_config* cfg, const char* out_dir, double* worst_deviation);

/* --- streaming FIR primitive -------------------------------------------- */

typedef struct dmc_fir dmc_fir;

dmc_fir* dmc_fir_create(const double* coeffs, size_t n_taps);
dmc_fir* dmc_fir_design_bandpass(size_t n_taps, double f_low, double f_high, double fs);
void dmc_fir_destroy(dmc_fir* f);

dmc_status dmc_fir_process(dmc_fir* f, const double* x, double* y, size_t n);
dmc_status dmc_fir_reset(dmc_fir* f);
size_t dmc_fir_num_taps(const dmc_fir* f);
dmc_status dmc_fir_coeffs(const dmc_fir* f, double* buf, size_t buf_len);

#ifdef __cplusplus
}
#endif

#endif /* DMCANC_H */
