#ifndef EAAS_COMPOSE_H
#define EAAS_COMPOSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EaasStatus {
  EAAS_STATUS_OK = 0,
  EAAS_STATUS_NULL_POINTER = 1,
  EAAS_STATUS_INVALID_ARGUMENT = 2,
  EAAS_STATUS_VALIDATION = 3,
  EAAS_STATUS_DOMAIN = 4,
  EAAS_STATUS_BF_LIMIT = 5,
  EAAS_STATUS_PARSE = 6,
  EAAS_STATUS_IO = 7,
  EAAS_STATUS_CONFIG = 8,
  EAAS_STATUS_PANIC = 99,
} EaasStatus;

typedef enum EaasAlgorithm {
  EAAS_ALGORITHM_IB = 0,
  EAAS_ALGORITHM_FCFS = 1,
  EAAS_ALGORITHM_BF = 2,
} EaasAlgorithm;

/**
 * Incentive model constants.
 */
typedef struct EaasConstants EaasConstants;

/**
 * One service and the requests competing for it.
 */
typedef struct EaasInstance EaasInstance;

/**
 * A composed schedule.
 */
typedef struct EaasPlan EaasPlan;

typedef struct EaasRewardBreakdown {
  double reward_bl;
  double reward_re;
  double reward_st;
  double reward_tp;
  double total;
} EaasRewardBreakdown;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or an empty
 * string. The pointer stays valid until the next call on the same thread.
 */
const char *eaas_last_error(void);

/**
 * Default constants. Never null; release with [`eaas_constants_free`].
 */
struct EaasConstants *eaas_constants_default(void);

/**
 * Loads constants from a TOML or JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EaasStatus eaas_constants_load(const char *path, struct EaasConstants **out);

/**
 * # Safety
 * `constants` must come from this library and not be used afterwards.
 */
void eaas_constants_free(struct EaasConstants *constants);

/**
 * Creates an instance for one service with no requests.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be valid.
 */
enum EaasStatus eaas_instance_new(const char *service_id,
                                  const char *owner_id,
                                  double capacity,
                                  double x,
                                  double y,
                                  uint16_t start_minute,
                                  uint16_t end_minute,
                                  struct EaasInstance **out);

/**
 * Creates an instance from a service JSON document and a JSON-lines fixture
 * text whose request lines become the requests.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be valid.
 */
enum EaasStatus eaas_instance_from_json(const char *service_json,
                                        const char *requests_jsonl,
                                        struct EaasInstance **out);

/**
 * Appends a request.
 *
 * # Safety
 * `instance` must be a live handle; strings must be NUL-terminated.
 */
enum EaasStatus eaas_instance_add_request(struct EaasInstance *instance,
                                          const char *request_id,
                                          const char *owner_id,
                                          double battery_level,
                                          double requested_energy,
                                          uint16_t start_minute,
                                          uint16_t end_minute,
                                          double x,
                                          double y);

/**
 * Number of requests in the instance; zero for a null handle.
 *
 * # Safety
 * `instance` must be null or a live handle.
 */
size_t eaas_instance_request_count(const struct EaasInstance *instance);

/**
 * Checks the instance. Writes the number of findings to `out_findings`;
 * when non-zero, returns `Validation` and [`eaas_last_error`] lists them.
 *
 * # Safety
 * `instance` must be a live handle and `out_findings` valid.
 */
enum EaasStatus eaas_instance_validate(const struct EaasInstance *instance, size_t *out_findings);

/**
 * # Safety
 * `instance` must come from this library and not be used afterwards.
 */
void eaas_instance_free(struct EaasInstance *instance);

/**
 * Reward breakdown of request `index` against the instance's service.
 * A null `constants` uses the defaults.
 *
 * # Safety
 * Handles must be live (or null for `constants`); `out` must be valid.
 */
enum EaasStatus eaas_reward_request(const struct EaasInstance *instance,
                                    const struct EaasConstants *constants,
                                    size_t index,
                                    struct EaasRewardBreakdown *out);

/**
 * Validates the instance, selects the servable requests and composes them
 * with `algorithm`. A null `constants` uses the defaults. `bf_limit` only
 * applies to brute force.
 *
 * # Safety
 * Handles must be live (or null for `constants`); `out` must be valid.
 */
enum EaasStatus eaas_compose(const struct EaasInstance *instance,
                             const struct EaasConstants *constants,
                             enum EaasAlgorithm algorithm,
                             size_t bf_limit,
                             struct EaasPlan **out);

/**
 * # Safety
 * `plan` must be a live handle.
 */
double eaas_plan_total_reward(const struct EaasPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle.
 */
double eaas_plan_remaining_energy(const struct EaasPlan *plan);

/**
 * Number of accepted requests.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
size_t eaas_plan_len(const struct EaasPlan *plan);

/**
 * Id of the `index`-th accepted request in start order, or null when out of
 * range. Borrowed from the plan.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
const char *eaas_plan_request_id(const struct EaasPlan *plan, size_t index);

/**
 * The plan as a JSON document. Release with [`eaas_string_free`].
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
char *eaas_plan_to_json(const struct EaasPlan *plan);

/**
 * # Safety
 * `plan` must come from this library and not be used afterwards.
 */
void eaas_plan_free(struct EaasPlan *plan);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void eaas_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EAAS_COMPOSE_H */
