#ifndef SOFTSAFE_H
#define SOFTSAFE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  // A parameter failed validation.
  SS_STATUS_DOMAIN = 2,
  SS_STATUS_CONFIG = 3,
  SS_STATUS_IO = 4,
  // Rank deficiency, empty set, unbounded program and similar.
  SS_STATUS_NUMERIC = 5,
  SS_STATUS_NO_CONVERGENCE = 6,
  SS_STATUS_OUT_OF_RANGE = 7,
  SS_STATUS_PANIC = 8,
} SsStatus;

// Opaque simulation: a validated config plus the records of its last run.
typedef struct SsSim SsSim;

// Opaque supervisor for a pair of identical wires.
typedef struct SsSupervisor SsSupervisor;

typedef struct SsActuator {
  double a1;
  double a2;
  double a3;
  double dt;
} SsActuator;

typedef struct SsSupervisorConfig {
  double gamma;
  double w_max;
  double w_lb;
} SsSupervisorConfig;

typedef struct SsRecord {
  size_t k;
  double t;
  double theta;
  double theta_ref;
  double temps[2];
  double attempted[2];
  // `INFINITY` when the supervisor is disabled.
  double caps[2];
  double applied[2];
  int active[2];
} SsRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *ss_last_error(void);

// Defaults for both parameter records. Either pointer may be null.
//
// # Safety
// Non-null pointers must be valid for writes.
void ss_defaults(struct SsActuator *actuator, struct SsSupervisorConfig *supervisor);

// One actuator step `a1 w + a2 u + a3`; `u` must lie in [0, 1].
//
// # Safety
// `out` must be a valid pointer to a double.
enum SsStatus ss_actuator_step(struct SsActuator params, double w, double u, double *out);

// # Safety
// `out` must be a valid pointer. On success `*out` owns a handle.
enum SsStatus ss_supervisor_new(struct SsActuator params,
                                struct SsSupervisorConfig config,
                                struct SsSupervisor **out);

// # Safety
// `handle` must come from [`ss_supervisor_new`] and not be used afterwards.
void ss_supervisor_free(struct SsSupervisor *handle);

// Uncapped input limit at temperature `w`.
//
// # Safety
// `handle` and `out` must be valid.
enum SsStatus ss_supervisor_cap(const struct SsSupervisor *handle, double w, double *out);

// Clips two attempted inputs given the two wire temperatures.
//
// # Safety
// `temps`, `attempted` and `applied` must point to two doubles, `active` to
// two ints. `active` may be null.
enum SsStatus ss_supervisor_apply(const struct SsSupervisor *handle,
                                  const double *temps,
                                  const double *attempted,
                                  double *applied,
                                  int *active);

// Maximal invariant set check for one wire model.
//
// # Safety
// `safe` and `iterations` must be valid.
enum SsStatus ss_verify(struct SsActuator params,
                        struct SsSupervisorConfig config,
                        size_t max_iters,
                        int *safe,
                        size_t *iterations);

// Builds a simulation from config text. Relative trajectory paths resolve
// against the working directory.
//
// # Safety
// `toml` must be a nul-terminated string and `out` a valid pointer.
enum SsStatus ss_sim_new(const char *toml, struct SsSim **out);

// # Safety
// `handle` must come from [`ss_sim_new`] and not be used afterwards.
void ss_sim_free(struct SsSim *handle);

// Runs the scenario, replacing any earlier records.
//
// # Safety
// `handle` must be valid. `len` may be null.
enum SsStatus ss_sim_run(struct SsSim *handle, size_t *len);

// Number of records from the last run (zero before the first).
//
// # Safety
// `handle` must be valid or null.
size_t ss_sim_len(const struct SsSim *handle);

// # Safety
// `handle` and `out` must be valid.
enum SsStatus ss_sim_record(const struct SsSim *handle, size_t index, struct SsRecord *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOFTSAFE_H */
