#ifndef SEQLSI_SEQLSI_H
#define SEQLSI_SEQLSI_H

/*
 * seqlsi: Bayesian inference for two-period sequential treatments with principal strata
 * under latent sequential ignorability (LSI) and sequential ignorability (SI-1, SI-2).
 *
 * Conventions
 *   - Every fallible call returns seqlsi_status; on failure seqlsi_last_error() holds a
 *     message for the calling thread until its next failing call.
 *   - Objects are opaque handles owned by the caller and released with the matching
 *     *_free function (NULL is accepted). Handles may be shared read-only between threads.
 *   - theta is a flat array of SEQLSI_THETA_SIZE doubles in seqlsi_theta_name() order:
 *     alpha (3), gamma (2 x 4), beta (4 x 4, sequences 00, 01, 10, 11), sigma2 (4).
 *   - Strata are coded 0=00, 1=01, 2=10, 3=11 as (Y1(0), Y1(1)). Contrasts are indexed
 *     0..5: 11.00, 11.01, 11.10, 10.00, 01.10, 01.00.
 *   - Report writers accept "-" as a path for standard output.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SEQLSI_BUILDING_LIBRARY)
#    define SEQLSI_API __declspec(dllexport)
#  else
#    define SEQLSI_API __declspec(dllimport)
#  endif
#else
#  define SEQLSI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define SEQLSI_THETA_SIZE 31
#define SEQLSI_N_CONTRASTS 6

typedef enum seqlsi_status {
    SEQLSI_OK = 0,
    SEQLSI_ERR_INVALID_ARGUMENT = 1, /* bad argument or spec/theta combination */
    SEQLSI_ERR_DOMAIN = 2,           /* non-finite or out-of-range number */
    SEQLSI_ERR_NUMERICAL = 3,        /* sampler or likelihood failure */
    SEQLSI_ERR_PARSE = 4,            /* malformed config or data file */
    SEQLSI_ERR_IO = 5,
    SEQLSI_ERR_INTERNAL = 6
} seqlsi_status;

typedef enum seqlsi_spec { SEQLSI_SPEC_LSI = 0, SEQLSI_SPEC_SI1 = 1, SEQLSI_SPEC_SI2 = 2 } seqlsi_spec;

typedef enum seqlsi_init { SEQLSI_INIT_WARM = 0, SEQLSI_INIT_RANDOM = 1 } seqlsi_init;

typedef struct seqlsi_dataset seqlsi_dataset;
typedef struct seqlsi_scenario seqlsi_scenario;
typedef struct seqlsi_chain seqlsi_chain;

SEQLSI_API const char* seqlsi_version(void);
SEQLSI_API const char* seqlsi_last_error(void);
SEQLSI_API const char* seqlsi_status_string(seqlsi_status status);

SEQLSI_API seqlsi_status seqlsi_spec_parse(const char* text, seqlsi_spec* out);
SEQLSI_API const char* seqlsi_spec_name(seqlsi_spec spec);
SEQLSI_API const char* seqlsi_theta_name(size_t i);       /* NULL if out of range */
SEQLSI_API const char* seqlsi_contrast_name(size_t k);    /* "ATE_11.00"; NULL if out of range */
SEQLSI_API uint64_t seqlsi_derive_seed(uint64_t seed, uint64_t stream);

/* ---- model ------------------------------------------------------------------------ */

SEQLSI_API seqlsi_status seqlsi_strata_probs(const double alpha[3], double out[4]);
/* LSI: h^{w1}_g from the stratum-level probit; SI-1: from the observed-Y1 probit. */
SEQLSI_API seqlsi_status seqlsi_assign_prob(const double theta[SEQLSI_THETA_SIZE], seqlsi_spec spec, int w1,
                                            int stratum, double* out);
SEQLSI_API seqlsi_status seqlsi_ate(const double theta[SEQLSI_THETA_SIZE], seqlsi_spec spec, size_t contrast,
                                    double* out);
SEQLSI_API seqlsi_status seqlsi_log_likelihood(const double theta[SEQLSI_THETA_SIZE], const seqlsi_dataset* data,
                                               seqlsi_spec spec, double* out);

/* ---- scenarios and simulation ------------------------------------------------------ */

SEQLSI_API seqlsi_status seqlsi_scenario_load(const char* path, seqlsi_scenario** out);
SEQLSI_API seqlsi_status seqlsi_scenario_create(const double theta[SEQLSI_THETA_SIZE], seqlsi_spec spec, size_t n,
                                                double p_w1, uint64_t seed, seqlsi_scenario** out);
SEQLSI_API void seqlsi_scenario_free(seqlsi_scenario* s);
SEQLSI_API seqlsi_status seqlsi_scenario_theta(const seqlsi_scenario* s, double out[SEQLSI_THETA_SIZE]);
SEQLSI_API seqlsi_status seqlsi_scenario_set_seed(seqlsi_scenario* s, uint64_t seed);
SEQLSI_API seqlsi_status seqlsi_scenario_set_n(seqlsi_scenario* s, size_t n);
/* Validated against the scenario's spec. */
SEQLSI_API seqlsi_status seqlsi_scenario_set_theta(seqlsi_scenario* s, const double theta[SEQLSI_THETA_SIZE]);
/* Writes the scenario back in config syntax. */
SEQLSI_API seqlsi_status seqlsi_scenario_write(const seqlsi_scenario* s, const char* path);

SEQLSI_API seqlsi_status seqlsi_true_ates(const double theta[SEQLSI_THETA_SIZE], double out[SEQLSI_N_CONTRASTS]);
/* Shifts the intercepts of sequences 10, 01, 11 so that E[Y2(s)] - E[Y2(00)] = offsets. */
SEQLSI_API seqlsi_status seqlsi_calibrate_intercepts(const double theta[SEQLSI_THETA_SIZE], const double offsets[3],
                                                     double out[SEQLSI_THETA_SIZE]);

/* Simulated dataset, latent truth included. */
SEQLSI_API seqlsi_status seqlsi_simulate(const seqlsi_scenario* s, seqlsi_dataset** out);
/* JSON sidecar with seed, n, theta_true and the true ATEs. */
SEQLSI_API seqlsi_status seqlsi_scenario_write_meta(const seqlsi_scenario* s, const char* path);

/* ---- datasets ---------------------------------------------------------------------- */

SEQLSI_API seqlsi_status seqlsi_dataset_read(const char* path, seqlsi_dataset** out);
SEQLSI_API seqlsi_status seqlsi_dataset_write(const seqlsi_dataset* d, const char* path, int with_truth);
SEQLSI_API void seqlsi_dataset_free(seqlsi_dataset* d);
SEQLSI_API size_t seqlsi_dataset_size(const seqlsi_dataset* d);
SEQLSI_API int seqlsi_dataset_has_truth(const seqlsi_dataset* d);

/* ---- fitting ----------------------------------------------------------------------- */

typedef struct seqlsi_mcmc_config {
    size_t burn_in;
    size_t kept;
    size_t thin;
    uint64_t seed;
    seqlsi_init init;
    double coef_mean;    /* Normal prior on every probit / regression coefficient */
    double coef_var;
    double sigma2_df;    /* scaled-inverse-chi-square prior on each sigma2 */
    double sigma2_scale;
} seqlsi_mcmc_config;

SEQLSI_API void seqlsi_mcmc_config_default(seqlsi_mcmc_config* cfg);
/* Overwrites the fields present in the file; others keep their current values. */
SEQLSI_API seqlsi_status seqlsi_mcmc_config_load(const char* path, seqlsi_mcmc_config* cfg);

/* Thread-safe: independent fits may run concurrently on the same dataset. */
SEQLSI_API seqlsi_status seqlsi_fit(const seqlsi_dataset* d, seqlsi_spec spec, const seqlsi_mcmc_config* cfg,
                                    seqlsi_chain** out);

/* ---- chains ------------------------------------------------------------------------ */

SEQLSI_API seqlsi_status seqlsi_chain_read(const char* path, seqlsi_chain** out);
/* Writes `path` and `path.meta.json`. */
SEQLSI_API seqlsi_status seqlsi_chain_write(const seqlsi_chain* c, const char* path);
SEQLSI_API void seqlsi_chain_free(seqlsi_chain* c);
SEQLSI_API seqlsi_spec seqlsi_chain_spec(const seqlsi_chain* c);
SEQLSI_API size_t seqlsi_chain_size(const seqlsi_chain* c);
SEQLSI_API double seqlsi_chain_wall_seconds(const seqlsi_chain* c);
SEQLSI_API seqlsi_status seqlsi_chain_draw(const seqlsi_chain* c, size_t i, double out[SEQLSI_THETA_SIZE]);
/* Posterior draws of contrast k; `out` holds seqlsi_chain_size() values. */
SEQLSI_API seqlsi_status seqlsi_chain_ate_draws(const seqlsi_chain* c, size_t k, double* out);

/* ---- reports ----------------------------------------------------------------------- */

typedef struct seqlsi_summary {
    double mean, sd, q025, q975;
} seqlsi_summary;

SEQLSI_API seqlsi_status seqlsi_summarize(const double* draws, size_t n, seqlsi_summary* out);

/* Side-by-side table of the six ATEs and the stratum probabilities; `truth` may be NULL. */
SEQLSI_API seqlsi_status seqlsi_write_summary(const seqlsi_chain* const* chains, size_t n_chains,
                                              const double* truth, const char* path);
/* One `x,density` file per ATE: <prefix>ATE_11.00.csv, ... */
SEQLSI_API seqlsi_status seqlsi_write_densities(const seqlsi_chain* c, const char* prefix, size_t n_points);
SEQLSI_API seqlsi_status seqlsi_write_diagnostics(const seqlsi_chain* const* chains, size_t n_chains,
                                                  const char* path);

typedef struct seqlsi_gap {
    int pairing; /* 1..4 */
    int w1;
    int first, second; /* strata codes */
    double mean, sd, lower, upper;
    int excludes_zero;
} seqlsi_gap;

/* Needs an LSI chain. `gaps` (may be NULL) receives 4 rows; `assign_path` (may be NULL)
 * receives the per-stratum assignment probability table. */
SEQLSI_API seqlsi_status seqlsi_sensitivity(const seqlsi_chain* c, double level, seqlsi_gap gaps[4],
                                            const char* path, const char* assign_path);

typedef struct seqlsi_ipw_result {
    double estimate[SEQLSI_N_CONTRASTS];
    double se[SEQLSI_N_CONTRASTS];
    int defined[SEQLSI_N_CONTRASTS];     /* 0 when an observed cell is empty */
    int se_defined[SEQLSI_N_CONTRASTS];
    size_t reps_used[SEQLSI_N_CONTRASTS];
} seqlsi_ipw_result;

/* `path` (may be NULL) receives the CSV report; `truth` (may be NULL) adds a column. */
SEQLSI_API seqlsi_status seqlsi_ipw(const seqlsi_dataset* d, size_t bootstrap_reps, uint64_t seed,
                                    const double* truth, seqlsi_ipw_result* out, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* SEQLSI_SEQLSI_H */
