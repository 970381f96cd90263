#ifndef POLYCBF_H
#define POLYCBF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes returned by every fallible function.
typedef enum PolycbfStatus {
  POLYCBF_STATUS_OK = 0,
  POLYCBF_STATUS_NULL_POINTER = 1,
  POLYCBF_STATUS_INVALID_ARGUMENT = 2,
  POLYCBF_STATUS_INVALID_UTF8 = 3,
  POLYCBF_STATUS_UNKNOWN_SCENARIO = 4,
  POLYCBF_STATUS_UNSAFE_START = 5,
  POLYCBF_STATUS_DEGENERATE_GRADIENT = 6,
  POLYCBF_STATUS_IO = 7,
  POLYCBF_STATUS_OUT_OF_RANGE = 8,
  POLYCBF_STATUS_PANIC = 9,
} PolycbfStatus;

// How a simulation ended.
typedef enum PolycbfTermination {
  POLYCBF_TERMINATION_GOAL = 0,
  POLYCBF_TERMINATION_HORIZON = 1,
  POLYCBF_TERMINATION_ERROR = 2,
} PolycbfTermination;

// Opaque scenario handle.
typedef struct PolycbfScenario PolycbfScenario;

// Opaque simulation result handle.
typedef struct PolycbfSimResult PolycbfSimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *polycbf_last_error(void);

// Number of bundled scenarios.
size_t polycbf_builtin_count(void);

// Name of the bundled scenario at `index`, or null when out of range. The
// string is static.
const char *polycbf_builtin_name(size_t index);

// Creates a bundled scenario by name.
//
// # Safety
// `name` must be a valid C string and `out` a valid pointer.
enum PolycbfStatus polycbf_scenario_builtin(const char *name, struct PolycbfScenario **out);

// Loads a scenario from a JSON file.
//
// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum PolycbfStatus polycbf_scenario_load(const char *path, struct PolycbfScenario **out);

// Parses a scenario from a JSON string.
//
// # Safety
// `json` must be a valid C string and `out` a valid pointer.
enum PolycbfStatus polycbf_scenario_from_json(const char *json, struct PolycbfScenario **out);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must come from this library and not be used afterwards.
void polycbf_scenario_free(struct PolycbfScenario *scenario);

// Writes 2 or 3 to `out`.
//
// # Safety
// Both pointers must be valid.
enum PolycbfStatus polycbf_scenario_dimension(const struct PolycbfScenario *scenario, size_t *out);

// Replaces the smoothing sharpness, buffer and class-K gain.
//
// # Safety
// `scenario` must be valid.
enum PolycbfStatus polycbf_scenario_set_params(struct PolycbfScenario *scenario,
                                               double kappa,
                                               double buffer,
                                               double alpha_gain);

// Evaluates `h`, its gradient and its time partial at position `p`, time
// `t`. `gradient` receives `len` values; any output may be null.
//
// # Safety
// `p` must point to `len` doubles and non-null outputs must be writable.
enum PolycbfStatus polycbf_evaluate(const struct PolycbfScenario *scenario,
                                    const double *p,
                                    size_t len,
                                    double t,
                                    double *h,
                                    double *gradient,
                                    double *time_partial);

// Nonsmooth barrier value of the agent at `p`, time `t`.
//
// # Safety
// `p` must point to `len` doubles and `out` must be writable.
enum PolycbfStatus polycbf_psi(const struct PolycbfScenario *scenario,
                               const double *p,
                               size_t len,
                               double t,
                               double *out);

// Goal-seeking command at `p`, written to `u` (`len` values).
//
// # Safety
// `p` and `u` must point to `len` doubles.
enum PolycbfStatus polycbf_desired_velocity(const struct PolycbfScenario *scenario,
                                            const double *p,
                                            size_t len,
                                            double *u);

// Filtered command at `p`, time `t`, written to `u`. `active` (optional)
// receives 1 when the filter modified the desired command.
//
// # Safety
// `p` and `u` must point to `len` doubles; `active` may be null.
enum PolycbfStatus polycbf_safe_velocity(const struct PolycbfScenario *scenario,
                                         const double *p,
                                         size_t len,
                                         double t,
                                         double *u,
                                         int *active);

// Runs the closed-loop simulation. `x0` may be null to use the scenario's
// start; nonpositive `dt` or `t_end` keep the scenario defaults.
//
// # Safety
// `x0` is null or points to `len` doubles; `out` must be valid.
enum PolycbfStatus polycbf_simulate(const struct PolycbfScenario *scenario,
                                    const double *x0,
                                    size_t len,
                                    double dt,
                                    double t_end,
                                    struct PolycbfSimResult **out);

// Releases a simulation result. Null is ignored.
//
// # Safety
// `result` must come from this library and not be used afterwards.
void polycbf_sim_result_free(struct PolycbfSimResult *result);

// Number of recorded samples.
//
// # Safety
// Both pointers must be valid.
enum PolycbfStatus polycbf_sim_result_len(const struct PolycbfSimResult *result, size_t *out);

// Time, position and barrier value of sample `index`. `p` receives the
// scenario dimension's worth of values; any output may be null.
//
// # Safety
// `result` must be valid; non-null outputs must be writable.
enum PolycbfStatus polycbf_sim_result_sample(const struct PolycbfSimResult *result,
                                             size_t index,
                                             double *t,
                                             double *p,
                                             double *h);

// Minimum of `h` along the trajectory.
//
// # Safety
// Both pointers must be valid.
enum PolycbfStatus polycbf_sim_result_min_h(const struct PolycbfSimResult *result, double *out);

// How the run ended.
//
// # Safety
// Both pointers must be valid.
enum PolycbfStatus polycbf_sim_result_termination(const struct PolycbfSimResult *result,
                                                  enum PolycbfTermination *out);

// Time at which the goal was reached, or a negative value if it was not.
//
// # Safety
// Both pointers must be valid.
enum PolycbfStatus polycbf_sim_result_goal_time(const struct PolycbfSimResult *result, double *out);

// Writes the trajectory CSV to `path`.
//
// # Safety
// `result` must be valid and `path` a valid C string.
enum PolycbfStatus polycbf_sim_result_write_csv(const struct PolycbfSimResult *result,
                                                const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYCBF_H */
