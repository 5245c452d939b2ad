#ifndef CRACSIM_H
#define CRACSIM_H

/* Generated from the cracsim-ffi crate by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum CracStatus {
  /**
   * Success.
   */
  CRAC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CRAC_STATUS_NULL_POINTER = 1,
  /**
   * An argument was outside its documented domain.
   */
  CRAC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation itself failed; see `crac_last_error`.
   */
  CRAC_STATUS_COMPUTE_FAILED = 3,
} CracStatus;

/**
 * Opaque protocol configuration handle.
 */
typedef struct CracConfig CracConfig;

/**
 * Channel statistics and bound audit for one configuration.
 *
 * `bounds_available` is 0 when the per-channel tables are not guaranteed
 * binary-symmetric (quadrant-uniform phase with a non-uniform prior); the
 * `xi_*` fields are NaN and `within_bounds` is 1 in that case.
 */
typedef struct CracReport {
  double success_a;
  double success_b;
  double i_a;
  double i_b;
  double i_total;
  double xi_a;
  double xi_b;
  double xi_sq_sum;
  int32_t bounds_available;
  int32_t within_bounds;
  /**
   * Classical announcement bits consumed; trial count for sampled runs,
   * zero for exact reports.
   */
  uint64_t classical_bits_used;
} CracReport;

/**
 * Result of the balanced-design search.
 */
typedef struct CracOptimum {
  double eta_star;
  double delta_star;
  double value;
} CracOptimum;

/**
 * Root-mean-square noise and disturbance of one probe interaction,
 * maximised over an equatorial state grid plus the poles.
 */
typedef struct CracOzawaReport {
  double epsilon_aligned;
  double epsilon_max;
  double disturbance_max;
  double meter_moment_gap_max;
} CracOzawaReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of the calling thread into `buf` as a
 * NUL-terminated string (truncating to `cap`). Returns the full message
 * length in bytes, excluding the NUL; 0 means no error has been recorded.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null (length query).
 */
size_t crac_last_error(char *buf, size_t cap);

/**
 * Crate version as a static NUL-terminated string; never freed by the
 * caller.
 */
const char *crac_version(void);

/**
 * Allocate a configuration with the built-in baseline settings.
 */
struct CracConfig *crac_config_new(void);

/**
 * Release a configuration handle. Null is a no-op.
 *
 * # Safety
 * `cfg` must be null or a pointer from `crac_config_new` not yet freed.
 */
void crac_config_free(struct CracConfig *cfg);

/**
 * Set both measurement axes (radians). Fails if the partition they induce
 * is degenerate.
 *
 * # Safety
 * `cfg` must be a live handle from `crac_config_new`.
 */
enum CracStatus crac_config_set_axes(struct CracConfig *cfg, double axis_a, double axis_b);

/**
 * Set the cloner angle in [0, pi/2].
 *
 * # Safety
 * `cfg` must be a live handle from `crac_config_new`.
 */
enum CracStatus crac_config_set_eta(struct CracConfig *cfg, double eta);

/**
 * Encode with the fixed phase `phi` (radians) every trial.
 *
 * # Safety
 * `cfg` must be a live handle from `crac_config_new`.
 */
enum CracStatus crac_config_set_phi_fixed(struct CracConfig *cfg, double phi);

/**
 * Sample the phase uniformly inside the drawn quadrant every trial.
 *
 * # Safety
 * `cfg` must be a live handle from `crac_config_new`.
 */
enum CracStatus crac_config_set_phi_uniform(struct CracConfig *cfg);

/**
 * Set the database prior (p00, p01, p10, p11); must sum to one.
 *
 * # Safety
 * `cfg` must be a live handle from `crac_config_new`.
 */
enum CracStatus crac_config_set_prior(struct CracConfig *cfg,
                                      double p00,
                                      double p01,
                                      double p10,
                                      double p11);

/**
 * Set the Monte Carlo trial count.
 *
 * # Safety
 * `cfg` must be a live handle from `crac_config_new`.
 */
enum CracStatus crac_config_set_trials(struct CracConfig *cfg, uint64_t trials);

/**
 * Set the deterministic seed.
 *
 * # Safety
 * `cfg` must be a live handle from `crac_config_new`.
 */
enum CracStatus crac_config_set_seed(struct CracConfig *cfg, uint64_t seed);

/**
 * Exact (integrated, noise-free) statistics and bound audit.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must point to a writable report.
 */
enum CracStatus crac_exact_report(const struct CracConfig *cfg, struct CracReport *out);

/**
 * Seeded Monte Carlo statistics; the bound audit is still evaluated on the
 * exact tables (the bounds are statements about the distribution, not the
 * sample).
 *
 * # Safety
 * `cfg` must be a live handle; `out` must point to a writable report.
 */
enum CracStatus crac_sampled_report(const struct CracConfig *cfg, struct CracReport *out);

/**
 * Balanced design point for the axes `(axis_a, axis_b)`.
 * `objective` 0 maximises the squared-bias budget, 1 the total mutual
 * information.
 *
 * # Safety
 * `out` must point to a writable `CracOptimum`.
 */
enum CracStatus crac_optimize(double axis_a,
                              double axis_b,
                              int32_t objective,
                              struct CracOptimum *out);

/**
 * Noise/disturbance report for a probe interaction: `unitary` 0 = swap,
 * 1 = identity, 2 = partial cloner with angle `eta` (ignored otherwise).
 * `axis` is the observable direction in radians.
 *
 * # Safety
 * `out` must point to a writable `CracOzawaReport`.
 */
enum CracStatus crac_ozawa_report(int32_t unitary,
                                  double eta,
                                  double axis,
                                  struct CracOzawaReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRACSIM_H */
