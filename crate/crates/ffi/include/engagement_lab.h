#ifndef ENGAGEMENT_LAB_H
#define ENGAGEMENT_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum ElStatus {
  EL_STATUS_OK = 0,
  EL_STATUS_INVALID_ARGUMENT = 1,
  EL_STATUS_NULL_POINTER = 2,
  EL_STATUS_NO_FEASIBLE_POINT = 3,
  EL_STATUS_NUMERICAL = 4,
  EL_STATUS_THEOREM_VIOLATION = 5,
  EL_STATUS_PANIC = 6,
} ElStatus;

/**
 * Opaque content point with its outside option.
 */
typedef struct ElModelPoint ElModelPoint;

/**
 * Opaque tree-feed configuration.
 */
typedef struct ElTreeConfig ElTreeConfig;

typedef struct ElEvaluation {
  double g_s;
  double g_t;
  double e_s;
  double e_t;
  bool participates;
} ElEvaluation;

typedef struct ElSimSummary {
  double mean_t;
  double mean_s;
  double se_t;
  double se_s;
  uint64_t replications;
  uint64_t seed;
} ElSimSummary;

typedef struct ElGammaResult {
  /**
   * Negative when the user never visits.
   */
  int64_t t_star;
  double e_t;
  double e_s;
} ElGammaResult;

typedef struct ElPopulationMetrics {
  double w_star;
  double pr_use;
  double e_t_given_use;
  double e_t_total;
  double e_s_total;
} ElPopulationMetrics;

typedef struct ElTreeSolution {
  double p_hat;
  double v_bar;
  double gamma_star;
  /**
   * `INFINITY` when system 2 never continues.
   */
  double tau_star;
  double e_s;
  double e_t;
  bool participates;
} ElTreeSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *el_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *el_version(void);

/**
 * Creates a point; release it with `el_model_point_free`.
 */
enum ElStatus el_model_point_new(double p,
                                 double q,
                                 double v_bar,
                                 double w,
                                 struct ElModelPoint **out);

/**
 * Releases a point. Null is ignored.
 *
 * # Safety
 * `point` must come from `el_model_point_new` and not be used afterwards.
 */
void el_model_point_free(struct ElModelPoint *point);

enum ElStatus el_model_point_evaluate(const struct ElModelPoint *point, struct ElEvaluation *out);

/**
 * Monte Carlo sessions with constant item value `v_bar`.
 */
enum ElStatus el_simulate(const struct ElModelPoint *point,
                          uint64_t replications,
                          uint64_t seed,
                          struct ElSimSummary *out);

enum ElStatus el_gamma_evaluate(double p,
                                double gamma,
                                double v_bar,
                                double w,
                                struct ElGammaResult *out);

/**
 * Population metrics for outside options uniform on `[a, b]`.
 */
enum ElStatus el_population_uniform(double p,
                                    double q,
                                    double v_bar,
                                    double a,
                                    double b,
                                    struct ElPopulationMetrics *out);

/**
 * `d` identical branches whose values take `values[i]` with probability
 * `probs[i]`. Release with `el_tree_config_free`.
 *
 * # Safety
 * `values` and `probs` must point to `n` readable doubles each.
 */
enum ElStatus el_tree_config_new_iid(uintptr_t d,
                                     double p,
                                     double q,
                                     const double *values,
                                     const double *probs,
                                     uintptr_t n,
                                     double w,
                                     struct ElTreeConfig **out);

/**
 * Releases a tree configuration. Null is ignored.
 *
 * # Safety
 * `config` must come from `el_tree_config_new_iid` and not be used afterwards.
 */
void el_tree_config_free(struct ElTreeConfig *config);

enum ElStatus el_tree_solve(const struct ElTreeConfig *config, struct ElTreeSolution *out);

/**
 * Utility- and engagement-maximizing widths over `d = 1..=d_max` for iid
 * branches; 0 means the user never visits.
 *
 * # Safety
 * `values` and `probs` must point to `n` readable doubles each.
 */
enum ElStatus el_tree_optimize_iid(double p,
                                   double q,
                                   const double *values,
                                   const double *probs,
                                   uintptr_t n,
                                   double w,
                                   uintptr_t d_max,
                                   uintptr_t *d_s,
                                   uintptr_t *d_t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENGAGEMENT_LAB_H */
