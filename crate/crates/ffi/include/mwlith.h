#ifndef MWLITH_H
#define MWLITH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MwlMode {
  MWL_MODE_MATTER = 0,
  MWL_MODE_EM = 1,
} MwlMode;

// Result of every fallible call. Values 2..=4 match the command-line exit codes.
typedef enum MwlStatus {
  MWL_STATUS_OK = 0,
  MWL_STATUS_NULL_POINTER = 1,
  MWL_STATUS_CONFIG = 2,
  MWL_STATUS_NUMERICAL = 3,
  MWL_STATUS_IO = 4,
  MWL_STATUS_INVALID_ARGUMENT = 5,
  MWL_STATUS_PANIC = 6,
} MwlStatus;

// Opaque handle: a single-slit table plus the geometry, grid and mode it was built for.
typedef struct MwlPropagator MwlPropagator;

// Physical setup, SI units.
typedef struct MwlGeometry {
  double wavelength;
  double source_distance;
  double screen_distance;
  double membrane_thickness;
  double c3_coefficient;
  double particle_mass;
  double width_reduction;
  double section_width;
  uint32_t n_sections;
  double amplitude;
} MwlGeometry;

// Genetic-solver settings. A `fitness_threshold` of zero or less means none.
typedef struct MwlGaConfig {
  uint32_t population_size;
  uint32_t n_parents;
  bool elitism;
  uint32_t seed_mutations;
  uint32_t offspring_mutations;
  bool unique_offspring;
  uint32_t generations;
  double fitness_alpha;
  double fitness_threshold;
  uint64_t rng_seed;
} MwlGaConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL after a success.
//
// The string is owned by the library and stays valid until the next call on
// the same thread.
const char *mwl_last_error_message(void);

// The metastable-helium / 5 nm SiN layout with the given dispersion inputs.
struct MwlGeometry mwl_geometry_helium_sin(double c3_coefficient, double particle_mass);

struct MwlGaConfig mwl_ga_config_default(void);

// Builds the single-slit table for `geometry` on `count` points over
// `[-half_extent, half_extent]`. `mode` is an [`MwlMode`] value.
//
// # Safety
// `geometry` must point to a valid [`MwlGeometry`]; `out` must be writable.
enum MwlStatus mwl_propagator_new(const struct MwlGeometry *geometry,
                                  double half_extent,
                                  uintptr_t count,
                                  uint32_t mode,
                                  struct MwlPropagator **out);

// Loads a table file written by [`mwl_propagator_save`] or the `table` command.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MwlStatus mwl_propagator_load(const char *path, struct MwlPropagator **out);

// # Safety
// `propagator` must be a live handle; `path` a NUL-terminated string.
enum MwlStatus mwl_propagator_save(const struct MwlPropagator *propagator, const char *path);

// Releases a handle. NULL is ignored.
//
// # Safety
// `propagator` must come from this library and not be used afterwards.
void mwl_propagator_free(struct MwlPropagator *propagator);

// Number of detector points, or 0 for NULL.
//
// # Safety
// `propagator` must be NULL or a live handle.
uintptr_t mwl_propagator_grid_len(const struct MwlPropagator *propagator);

// Number of mask sections, or 0 for NULL.
//
// # Safety
// `propagator` must be NULL or a live handle.
uintptr_t mwl_propagator_n_sections(const struct MwlPropagator *propagator);

// Copies the geometry the handle was built for.
//
// # Safety
// `propagator` must be a live handle; `out` must be writable.
enum MwlStatus mwl_propagator_geometry(const struct MwlPropagator *propagator,
                                       struct MwlGeometry *out);

// Writes the detector positions (m) into `out[0..len]`; `len` must equal the grid length.
//
// # Safety
// `out` must hold `len` writable doubles.
enum MwlStatus mwl_propagator_positions(const struct MwlPropagator *propagator,
                                        double *out,
                                        uintptr_t len);

// Peak-one normalized pattern of a mask.
//
// # Safety
// `mask` must hold `mask_len` bytes; `out` must hold `out_len` writable doubles.
enum MwlStatus mwl_forward(const struct MwlPropagator *propagator,
                           const uint8_t *mask,
                           uintptr_t mask_len,
                           double *out,
                           uintptr_t out_len);

// Fitness `1 / (α + Σ|target - pattern(mask)|)` against a peak-one target.
//
// # Safety
// `mask` must hold `mask_len` bytes, `target` `target_len` doubles; `out` must be writable.
enum MwlStatus mwl_fitness(const struct MwlPropagator *propagator,
                           const uint8_t *mask,
                           uintptr_t mask_len,
                           const double *target,
                           uintptr_t target_len,
                           double alpha,
                           double *out);

// Runs the genetic solver against `target`.
//
// With `seed_mask` non-NULL the initial population is seeded from it,
// otherwise it is random. The best mask is written to `best_mask[0..mask_len]`.
// `best_fitness` and `generations_run` may be NULL.
//
// # Safety
// All non-NULL pointers must reference buffers of the stated lengths.
enum MwlStatus mwl_solve(const struct MwlPropagator *propagator,
                         const double *target,
                         uintptr_t target_len,
                         const struct MwlGaConfig *config,
                         const uint8_t *seed_mask,
                         uint8_t *best_mask,
                         uintptr_t mask_len,
                         double *best_fitness,
                         uintptr_t *generations_run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MWLITH_H */
