#ifndef MINING_FAIRNESS_H
#define MINING_FAIRNESS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfField {
  MF_FIELD_PI = 0,
  MF_FIELD_REWARD_RATE = 1,
  MF_FIELD_LF1 = 2,
  MF_FIELD_LF2 = 3,
} MfField;

typedef enum MfRule {
  MF_RULE_FIRST_SEEN = 0,
  MF_RULE_RANDOM = 1,
  MF_RULE_LAST_GENERATED = 2,
} MfRule;

typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_NULL_POINTER = 1,
  MF_STATUS_INVALID_MODEL = 2,
  MF_STATUS_INVALID_ARGUMENT = 3,
  MF_STATUS_NON_CONVERGENCE = 4,
  MF_STATUS_INVALID_CONFIG = 5,
  MF_STATUS_BUFFER_TOO_SMALL = 6,
  MF_STATUS_PANIC = 7,
} MfStatus;

/**
 * Opaque network model.
 */
typedef struct MfModel MfModel;

/**
 * Opaque fairness report.
 */
typedef struct MfReport MfReport;

typedef struct MfTwoMiner {
  double f;
  double pi_a;
  double pi_b;
  double w_ab;
  double w_ba;
  double lf1_a;
  double lf1_b;
} MfTwoMiner;

typedef struct MfImpacts {
  double i1;
  double i2;
  double i3;
} MfImpacts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` as a
 * NUL-terminated string, truncating if needed. Returns the full message
 * length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t mf_last_error_message(char *buf, size_t len);

/**
 * Builds a model from `n` hashrate shares and a row-major `n × n` delay
 * matrix in seconds.
 *
 * # Safety
 * `alpha` must hold `n` values, `delays` `n * n` values, and `out` must be
 * valid for a write.
 */
enum MfStatus mf_model_new(size_t n,
                           const double *alpha,
                           const double *delays,
                           double mean_interval,
                           enum MfRule rule,
                           struct MfModel **out);

/**
 * Builds a model from the JSON config format used by the `mfair` CLI.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for a write.
 */
enum MfStatus mf_model_from_json(const char *json, struct MfModel **out);

/**
 * Number of miners, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t mf_model_miners(const struct MfModel *model);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void mf_model_free(struct MfModel *model);

/**
 * Model-based fairness. Pass `epsilon = 0` and `max_iter = 0` for defaults.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for a write.
 */
enum MfStatus mf_model_fairness(const struct MfModel *model,
                                double epsilon,
                                uint64_t max_iter,
                                struct MfReport **out);

/**
 * Fairness with round start rates taken equal to hashrate shares.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for a write.
 */
enum MfStatus mf_baseline_fairness(const struct MfModel *model, struct MfReport **out);

/**
 * Simulates `rounds` rounds and reports the empirical fairness.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for a write.
 */
enum MfStatus mf_simulate(const struct MfModel *model,
                          uint64_t rounds,
                          uint64_t seed,
                          struct MfReport **out);

/**
 * Number of miners covered by a report, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t mf_report_miners(const struct MfReport *report);

/**
 * Copies one per-miner column of a report into `buf`, which must hold at
 * least `mf_report_miners(report)` values.
 *
 * # Safety
 * `report` must be a live handle and `buf` valid for `len` writes.
 */
enum MfStatus mf_report_get(const struct MfReport *report,
                            enum MfField field,
                            double *buf,
                            size_t len);

/**
 * Writes the global indicators GF1 and GF2.
 *
 * # Safety
 * `report` must be a live handle; `gf1` and `gf2` valid for a write.
 */
enum MfStatus mf_report_global(const struct MfReport *report, double *gf1, double *gf2);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void mf_report_free(struct MfReport *report);

/**
 * Closed-form two-miner solution with a common delay.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum MfStatus mf_two_miner(double alpha_a, double d_over_t, struct MfTwoMiner *out);

/**
 * Impacts of one-, two- and three-or-more-block rounds at `d/T`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum MfStatus mf_impacts(double d_over_t, struct MfImpacts *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINING_FAIRNESS_H */
