#ifndef VECSIM_H
#define VECSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum VecsimStatus {
  VECSIM_STATUS_OK = 0,
  VECSIM_STATUS_NULL_POINTER = 1,
  VECSIM_STATUS_INVALID_UTF8 = 2,
  VECSIM_STATUS_INVALID_CONFIG = 3,
  // The simulation already reached its horizon.
  VECSIM_STATUS_FINISHED = 4,
  VECSIM_STATUS_PANIC = 5,
} VecsimStatus;

// Scenario configuration.
typedef struct VecsimConfig VecsimConfig;

// A simulation in progress, or its finished summary.
typedef struct VecsimSim VecsimSim;

// One slot's outcome.
typedef struct VecsimSlotRecord {
  uint64_t slot;
  uint64_t generated;
  uint64_t committed;
  uint64_t failed;
  uint64_t completed;
  double social_welfare;
  double social_welfare_cumulative;
  double vehicle_utility;
  double server_utility;
  double apr;
  double acd;
  double acr;
} VecsimSlotRecord;

// Whole-run summary.
typedef struct VecsimMetrics {
  uint64_t slots;
  uint64_t seed;
  double social_welfare;
  double vehicle_utility;
  double server_utility;
  double apr;
  double acd;
  double acr;
  uint64_t n_generated;
  uint64_t n_succeeded;
  uint64_t n_failed;
  uint64_t n_local;
  uint64_t n_edge;
  uint64_t n_cloud;
  // $/GHz over committed remote deals.
  double mean_price_per_ghz;
  double runtime_ms;
} VecsimMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *vecsim_last_error(void);

// Library version as a static NUL-terminated string.
const char *vecsim_version(void);

// Default configuration.
struct VecsimConfig *vecsim_config_default(void);

// Parse a TOML configuration. Missing keys take their defaults.
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
enum VecsimStatus vecsim_config_from_toml(const char *text, struct VecsimConfig **out);

// Set one key, e.g. `scenario.vehicle_count` = `"50"`. The configuration
// is left unchanged on failure.
//
// # Safety
// `cfg` must come from this library; strings must be NUL-terminated.
enum VecsimStatus vecsim_config_set(struct VecsimConfig *cfg, const char *key, const char *value);

// Release a configuration. NULL is ignored.
//
// # Safety
// `cfg` must come from this library and not be used afterwards.
void vecsim_config_free(struct VecsimConfig *cfg);

// Build a simulation. The configuration is copied and may be freed.
//
// # Safety
// `cfg` must come from this library; `out` must be writable.
enum VecsimStatus vecsim_sim_new(const struct VecsimConfig *cfg, struct VecsimSim **out);

// Advance one slot. Returns `Finished` once the horizon is reached;
// `record` may be NULL.
//
// # Safety
// `sim` must come from this library; `record` must be NULL or writable.
enum VecsimStatus vecsim_sim_step(struct VecsimSim *sim, struct VecsimSlotRecord *record);

// Number of slots simulated so far.
//
// # Safety
// `sim` must come from this library or be NULL (returns 0).
uint64_t vecsim_sim_slot(const struct VecsimSim *sim);

// Run the remaining slots, drain in-flight work and write the summary.
// Calling it again returns the same summary.
//
// # Safety
// `sim` must come from this library; `metrics` must be NULL or writable.
enum VecsimStatus vecsim_sim_run(struct VecsimSim *sim, struct VecsimMetrics *metrics);

// Release a simulation. NULL is ignored.
//
// # Safety
// `sim` must come from this library and not be used afterwards.
void vecsim_sim_free(struct VecsimSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VECSIM_H */
