#ifndef CONFORMAL_RIS_H
#define CONFORMAL_RIS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum CrisStatus {
  CRIS_STATUS_OK = 0,
  CRIS_STATUS_NULL_POINTER = 1,
  CRIS_STATUS_INVALID_ARGUMENT = 2,
  CRIS_STATUS_BUFFER_TOO_SMALL = 3,
  CRIS_STATUS_GEOMETRY = 4,
  CRIS_STATUS_PHASE = 5,
  CRIS_STATUS_CHANNEL = 6,
  CRIS_STATUS_SIMULATION = 7,
  CRIS_STATUS_PANIC = 8,
} CrisStatus;

/**
 * Relay mode for [`cris_blockage_probability`].
 */
typedef enum CrisBlockageMode {
  CRIS_BLOCKAGE_MODE_DIRECT = 0,
  CRIS_BLOCKAGE_MODE_WITH_IRS = 1,
  CRIS_BLOCKAGE_MODE_WITH_RIS = 2,
} CrisBlockageMode;

/**
 * Opaque cylindrical metasurface layout.
 */
typedef struct CrisGeometry CrisGeometry;

/**
 * Opaque per-element phase profile.
 */
typedef struct CrisPhaseProfile CrisPhaseProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (nul-terminated,
 * truncated to `len`). Returns the full message length without the nul,
 * or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cris_last_error_message(char *buf, size_t len);

/**
 * Library version as a static nul-terminated string.
 */
const char *cris_version(void);

/**
 * Free-space wavelength in meters.
 */
double cris_wavelength(double frequency_ghz);

/**
 * Builds an `rows x cols` cylindrical layout of radius `radius` (use
 * `INFINITY` for a flat surface) in its own door frame.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum CrisStatus cris_geometry_new(size_t rows,
                                  size_t cols,
                                  double radius,
                                  double d_m,
                                  double d_n,
                                  struct CrisGeometry **out);

/**
 * # Safety
 * `g` must be null or a handle from [`cris_geometry_new`] not yet freed.
 */
void cris_geometry_free(struct CrisGeometry *g);

/**
 * Number of elements, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live geometry handle.
 */
size_t cris_geometry_len(const struct CrisGeometry *g);

/**
 * Surface area in square meters.
 *
 * # Safety
 * `g` must be a live geometry handle and `out` writable.
 */
enum CrisStatus cris_geometry_surface_area(const struct CrisGeometry *g, double *out);

/**
 * Writes element positions as `x, y, z` triples in flat-index order.
 * `len` is the buffer length in doubles and must be at least `3 * len(g)`.
 *
 * # Safety
 * `g` must be a live geometry handle; `xyz` must hold `len` doubles.
 */
enum CrisStatus cris_geometry_positions(const struct CrisGeometry *g, double *xyz, size_t len);

/**
 * Reconfigurable profile steering `(theta_i, phi_i)` to `(theta_o, phi_o)`,
 * both directions pointing away from the surface in the door frame.
 *
 * # Safety
 * `g` must be a live geometry handle and `out` a valid handle slot.
 */
enum CrisStatus cris_phase_optimal(const struct CrisGeometry *g,
                                   double theta_i,
                                   double phi_i,
                                   double theta_o,
                                   double phi_o,
                                   double wavelength,
                                   struct CrisPhaseProfile **out);

/**
 * Shape compensation that makes the cylinder behave as a flat mirror.
 *
 * # Safety
 * As for [`cris_phase_optimal`].
 */
enum CrisStatus cris_phase_perpendicular(const struct CrisGeometry *g,
                                         double wavelength,
                                         struct CrisPhaseProfile **out);

/**
 * Fixed profile for specular reflection at design azimuth `theta_bar` in `[0, pi/2]`.
 *
 * # Safety
 * As for [`cris_phase_optimal`].
 */
enum CrisStatus cris_phase_preconfigured(const struct CrisGeometry *g,
                                         double theta_bar,
                                         double wavelength,
                                         struct CrisPhaseProfile **out);

/**
 * # Safety
 * `p` must be null or a live profile handle.
 */
void cris_phase_free(struct CrisPhaseProfile *p);

/**
 * Copies the wrapped phases (radians in `[0, 2pi)`) into `phases`.
 *
 * # Safety
 * `p` must be a live profile handle; `phases` must hold `len` doubles.
 */
enum CrisStatus cris_phase_values(const struct CrisPhaseProfile *p, double *phases, size_t len);

/**
 * Normalized far-field gain in dB; a fully coherent surface with an isotropic
 * pattern (`q = 0`) scores `10 log10(M N)`.
 *
 * # Safety
 * `g` and `p` must be live handles; `out_db` must be writable.
 */
enum CrisStatus cris_normalized_gain_db(const struct CrisGeometry *g,
                                        const struct CrisPhaseProfile *p,
                                        double theta_i,
                                        double phi_i,
                                        double theta_o,
                                        double phi_o,
                                        double wavelength,
                                        double q,
                                        double *out_db);

/**
 * Mean line-of-sight path loss in dB.
 */
double cris_los_pathloss_db(double distance_m, double frequency_ghz);

/**
 * Monte-Carlo blockage probability on the default highway for `trials`
 * scenes with traffic density `rho` (cars/km/lane) and TxV-RxV distance `r_d`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CrisStatus cris_blockage_probability(double rho,
                                          double r_d,
                                          uint64_t trials,
                                          uint64_t seed,
                                          enum CrisBlockageMode mode,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFORMAL_RIS_H */
