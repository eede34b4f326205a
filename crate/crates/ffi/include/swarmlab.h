#ifndef SWARMLAB_H
#define SWARMLAB_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_UNKNOWN_AGENT = 3,
  SL_STATUS_QUESTION_ENDED = 4,
  SL_STATUS_LENGTH_MISMATCH = 5,
  SL_STATUS_ZERO_VARIANCE = 6,
  SL_STATUS_REDRAW_LIMIT = 7,
  SL_STATUS_PANIC = 8,
} SlStatus;

typedef enum SlPhase {
  SL_PHASE_DELIBERATING = 0,
  SL_PHASE_DECIDED = 1,
  SL_PHASE_TIMED_OUT = 2,
} SlPhase;

/**
 * Opaque swarm handle. Agents are addressed by index `0..n_agents`.
 */
typedef struct SlSwarm SlSwarm;

/**
 * Mirror of the dynamics parameters; see [`sl_default_params`].
 */
typedef struct SlDynamicsParams {
  double tick_dt;
  double v_max;
  double engage_gap;
  double disengage_gap;
  double puck_radius;
  uint32_t dwell_required;
  uint32_t deliberation_limit;
} SlDynamicsParams;

typedef struct SlOutcome {
  enum SlPhase phase;
  /**
   * Chosen target when `phase` is decided, otherwise -1.
   */
  int32_t choice;
  uint64_t tick;
} SlOutcome;

typedef struct SlBootstrap {
  double kappa_point;
  double kappa_mean;
  double kappa_std;
  double ci_low;
  double ci_high;
  size_t resamples;
} SlBootstrap;

/**
 * Undefined rates (no positives or no negatives in the truth) are NaN.
 */
typedef struct SlBinary {
  double sensitivity;
  double specificity;
  double youden;
} SlBinary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *sl_status_message(enum SlStatus status);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Default dynamics parameters.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SlStatus sl_default_params(struct SlDynamicsParams *out);

/**
 * Create a swarm of `n_agents` (at least 1) with the puck at the origin.
 * `params` may be null for the defaults.
 *
 * # Safety
 * `params` must be null or point to a valid struct; `out` must be valid for
 * writes. The handle must be released with [`sl_swarm_free`].
 */
enum SlStatus sl_swarm_new(uint32_t n_agents,
                           const struct SlDynamicsParams *params,
                           struct SlSwarm **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `swarm` must be null or a handle from [`sl_swarm_new`] not yet freed.
 */
void sl_swarm_free(struct SlSwarm *swarm);

/**
 * Place agent `agent`'s magnet at `(x, y)`.
 *
 * # Safety
 * `swarm` must be a live handle.
 */
enum SlStatus sl_swarm_set_magnet(struct SlSwarm *swarm, uint32_t agent, double x, double y);

/**
 * Lift agent `agent`'s magnet off the board.
 *
 * # Safety
 * `swarm` must be a live handle.
 */
enum SlStatus sl_swarm_lift_magnet(struct SlSwarm *swarm, uint32_t agent);

/**
 * Advance one tick. `out_phase` may be null.
 *
 * # Safety
 * `swarm` must be a live handle; `out_phase` null or valid for writes.
 */
enum SlStatus sl_swarm_step(struct SlSwarm *swarm, enum SlPhase *out_phase);

/**
 * Current puck centre.
 *
 * # Safety
 * `swarm` must be a live handle; `x` and `y` valid for writes.
 */
enum SlStatus sl_swarm_puck(struct SlSwarm *swarm, double *x, double *y);

/**
 * Phase, chosen target and tick count.
 *
 * # Safety
 * `swarm` must be a live handle; `out` valid for writes.
 */
enum SlStatus sl_swarm_outcome(struct SlSwarm *swarm, struct SlOutcome *out);

/**
 * Cohen's kappa of two class sequences of length `n`.
 *
 * # Safety
 * `a` and `b` must point to `n` bytes; `out` valid for writes.
 */
enum SlStatus sl_kappa(const uint8_t *a, const uint8_t *b, size_t n, double *out);

/**
 * Seeded bootstrap of kappa over `resamples` exam-level resamples.
 *
 * # Safety
 * `a` and `b` must point to `n` bytes; `out` valid for writes.
 */
enum SlStatus sl_bootstrap_kappa(const uint8_t *a,
                                 const uint8_t *b,
                                 size_t n,
                                 size_t resamples,
                                 uint64_t seed,
                                 struct SlBootstrap *out);

/**
 * Cronbach's alpha of a row-major `raters` x `exams` score matrix.
 *
 * # Safety
 * `scores` must point to `raters * exams` doubles; `out` valid for writes.
 */
enum SlStatus sl_cronbach_alpha(const double *scores, size_t raters, size_t exams, double *out);

/**
 * Lesion-present (class > 0) sensitivity, specificity and Youden index.
 *
 * # Safety
 * `pred` and `truth` must point to `n` bytes; `out` valid for writes.
 */
enum SlStatus sl_binary_metrics(const uint8_t *pred,
                                const uint8_t *truth,
                                size_t n,
                                struct SlBinary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWARMLAB_H */
