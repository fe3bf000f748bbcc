#ifndef COSIM_DSE_H
#define COSIM_DSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum CosimStatus {
  COSIM_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  COSIM_STATUS_NULL_POINTER = 1,
  /*
   A string argument was not valid UTF-8.
   */
  COSIM_STATUS_INVALID_UTF8 = 2,
  /*
   Bad configuration, parameter, port or input file.
   */
  COSIM_STATUS_INVALID_ARGUMENT = 3,
  /*
   A unit failed while the simulation was running.
   */
  COSIM_STATUS_SIMULATION_FAILED = 4,
  /*
   Index outside the trace.
   */
  COSIM_STATUS_OUT_OF_RANGE = 5,
  /*
   Reading or writing a file failed.
   */
  COSIM_STATUS_IO = 6,
  /*
   The library panicked; this is a bug.
   */
  COSIM_STATUS_INTERNAL = 7,
} CosimStatus;

/*
 Opaque results trace.
 */
typedef struct CosimTrace CosimTrace;

/*
 Opaque simulation unit.
 */
typedef struct CosimUnit CosimUnit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null after a
 successful one. Valid until the next call on the same thread.
 */
const char *cosim_last_error_message(void);

/*
 Library version as a static string.
 */
const char *cosim_version(void);

/*
 Creates a built-in unit (`vehicle`, `supervisory`, ...) with `n_params`
 parameter overrides. Units that need a map, path or trace attachment
 cannot be created here; run them through a multi-model file instead.

 # Safety
 `unit_type` must be a valid C string; `param_names` and `param_values`
 must point to `n_params` entries (they may be null when `n_params` is 0);
 `out` must be writable.
 */
enum CosimStatus cosim_unit_new(const char *unit_type,
                                const char *const *param_names,
                                const double *param_values,
                                uintptr_t n_params,
                                struct CosimUnit **out);

/*
 # Safety
 `unit` must come from [`cosim_unit_new`]; `port` must be a valid C string.
 */
enum CosimStatus cosim_unit_set_input(struct CosimUnit *unit, const char *port, double value);

/*
 Advances the unit by `h` seconds.

 # Safety
 `unit` must come from [`cosim_unit_new`].
 */
enum CosimStatus cosim_unit_do_step(struct CosimUnit *unit, double h);

/*
 # Safety
 `unit` must come from [`cosim_unit_new`]; `port` must be a valid C
 string; `value` must be writable.
 */
enum CosimStatus cosim_unit_get_output(const struct CosimUnit *unit,
                                       const char *port,
                                       double *value);

/*
 # Safety
 `unit` must come from [`cosim_unit_new`]; `time` must be writable.
 */
enum CosimStatus cosim_unit_time(const struct CosimUnit *unit, double *time);

/*
 # Safety
 `unit` must come from [`cosim_unit_new`] and not be used afterwards.
 Null is ignored.
 */
void cosim_unit_free(struct CosimUnit *unit);

/*
 Mean and maximum Euclidean distance between `n` aligned points.
 `reference_xy` and `simulated_xy` hold `2 * n` interleaved x, y values.

 # Safety
 Both arrays must hold `2 * n` doubles; `mean` and `max` must be writable.
 */
enum CosimStatus cosim_cross_track_error(const double *reference_xy,
                                         const double *simulated_xy,
                                         uintptr_t n,
                                         double *mean,
                                         double *max);

/*
 Runs the multi-model file at `config_path` and returns its trace.

 # Safety
 `config_path` must be a valid C string; `out` must be writable.
 */
enum CosimStatus cosim_run_config(const char *config_path, struct CosimTrace **out);

/*
 Number of rows (time points) in the trace; 0 for null.

 # Safety
 `trace` must be null or come from [`cosim_run_config`].
 */
uintptr_t cosim_trace_rows(const struct CosimTrace *trace);

/*
 Number of value channels (excluding time); 0 for null.

 # Safety
 `trace` must be null or come from [`cosim_run_config`].
 */
uintptr_t cosim_trace_channels(const struct CosimTrace *trace);

/*
 Channel name, owned by the trace; null when out of range.

 # Safety
 `trace` must be null or come from [`cosim_run_config`].
 */
const char *cosim_trace_channel_name(const struct CosimTrace *trace, uintptr_t channel);

/*
 # Safety
 `trace` must come from [`cosim_run_config`]; `time` must be writable.
 */
enum CosimStatus cosim_trace_time(const struct CosimTrace *trace, uintptr_t row, double *time);

/*
 # Safety
 `trace` must come from [`cosim_run_config`]; `value` must be writable.
 */
enum CosimStatus cosim_trace_value(const struct CosimTrace *trace,
                                   uintptr_t row,
                                   uintptr_t channel,
                                   double *value);

/*
 Writes the trace as a results CSV.

 # Safety
 `trace` must come from [`cosim_run_config`]; `path` must be a valid C
 string.
 */
enum CosimStatus cosim_trace_write_csv(const struct CosimTrace *trace, const char *path);

/*
 # Safety
 `trace` must come from [`cosim_run_config`] and not be used afterwards.
 Null is ignored.
 */
void cosim_trace_free(struct CosimTrace *trace);

/*
 Runs the exhaustive sweep described by the DSE configuration at
 `config_path` and writes the results table to `out_path`. `workers` of
 0 uses one worker per CPU.

 # Safety
 Both paths must be valid C strings.
 */
enum CosimStatus cosim_dse_sweep(const char *config_path, const char *out_path, uintptr_t workers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COSIM_DSE_H */
