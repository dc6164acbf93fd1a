#ifndef HONEYCOMB_DIRAC_H
#define HONEYCOMB_DIRAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_ARGUMENT = 2,
  HC_STATUS_SINGULAR_EVALUATION = 3,
  HC_STATUS_CONVERGENCE = 4,
  HC_STATUS_SOLVER = 5,
  HC_STATUS_INCONSISTENCY = 6,
  HC_STATUS_DEGENERATE_CONE = 7,
  HC_STATUS_CONE_WINDOW = 8,
  HC_STATUS_DEGENERATE_INPUT = 9,
  HC_STATUS_CONFIG = 10,
  HC_STATUS_IO = 11,
  HC_STATUS_PANIC = 12,
} HcStatus;

/**
 * Honeycomb crystal of two disks per cell with its boundary discretization.
 */
typedef struct HcCrystal HcCrystal;

/**
 * Two-component envelope on a square periodic grid.
 */
typedef struct HcEnvelope HcEnvelope;

typedef struct HcComplex {
  double re;
  double im;
} HcComplex;

typedef struct HcCapacitance {
  double c1;
  struct HcComplex c2;
  double hermitian_error;
  double diagonal_error;
} HcCapacitance;

typedef struct HcCoefficient {
  /**
   * Finite-difference value of the cone coefficient.
   */
  struct HcComplex c;
  /**
   * Boundary-integral value.
   */
  struct HcComplex c_bi;
  double rel_gap;
  double ratio_error;
  double c1_star;
} HcCoefficient;

typedef struct HcDiracParams {
  double delta;
  double omega_star;
  struct HcComplex a_delta;
  struct HcComplex eta_sharp;
  double lambda_delta;
} HcDiracParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
 * `len`) and returns the full message length without the terminator; 0 if there is none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t hc_last_error_message(char *buf, size_t len);

/**
 * Creates a crystal. `lattice_constant <= 0` selects the constant with unit dual-cell area;
 * `radius_fraction` is the disk radius over the lattice constant.
 *
 * # Safety
 * `out` must be null or valid for writing one pointer.
 */
enum HcStatus hc_crystal_new(double lattice_constant,
                             double radius_fraction,
                             size_t nodes_per_boundary,
                             struct HcCrystal **out);

/**
 * # Safety
 * `crystal` must be null or a handle from [`hc_crystal_new`] not yet freed.
 */
void hc_crystal_free(struct HcCrystal *crystal);

/**
 * Writes the Dirac point `α*` and the inclusion area `|D_1|`.
 *
 * # Safety
 * `crystal` must be a live handle; `alpha_star` must hold 2 doubles; `area` one double.
 */
enum HcStatus hc_crystal_geometry(const struct HcCrystal *crystal,
                                  double *alpha_star,
                                  double *area);

/**
 * Capacitance matrix entries at quasimomentum `(alpha_x, alpha_y)`.
 *
 * # Safety
 * `crystal` must be a live handle and `out` valid for writing.
 */
enum HcStatus hc_crystal_capacitance(const struct HcCrystal *crystal,
                                     double alpha_x,
                                     double alpha_y,
                                     struct HcCapacitance *out);

/**
 * The two subwavelength frequencies at `count` quasimomenta stored as `(x, y)` pairs.
 *
 * # Safety
 * `alphas` must hold `2·count` doubles; `omega1`, `omega2` `count` doubles each.
 */
enum HcStatus hc_crystal_bands(const struct HcCrystal *crystal,
                               const double *alphas,
                               size_t count,
                               double delta,
                               double *omega1,
                               double *omega2);

/**
 * Cone coefficient `c` by finite differences and by the boundary integral.
 *
 * # Safety
 * `crystal` must be a live handle and `out` valid for writing.
 */
enum HcStatus hc_crystal_coefficient(const struct HcCrystal *crystal, struct HcCoefficient *out);

/**
 * Constants of the effective Dirac system for contrast `delta`.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum HcStatus hc_dirac_params(double delta,
                              struct HcComplex c,
                              double inclusion_area,
                              double c1_star,
                              struct HcDiracParams *out);

/**
 * Envelope on the `n × n` grid of side `span` centred at the origin, from `n²` samples per
 * component in x-major order.
 *
 * # Safety
 * `v1`, `v2` must hold `n·n` values; `out` must be valid for writing one pointer.
 */
enum HcStatus hc_envelope_new(size_t n,
                              double span,
                              const struct HcComplex *v1,
                              const struct HcComplex *v2,
                              struct HcEnvelope **out);

/**
 * # Safety
 * `env` must be null or a handle not yet freed.
 */
void hc_envelope_free(struct HcEnvelope *env);

/**
 * New envelope holding the exact evolution of `env` by time `t`.
 *
 * # Safety
 * `env` must be a live handle, `params` readable and `out` valid for writing one pointer.
 */
enum HcStatus hc_envelope_evolve(const struct HcEnvelope *env,
                                 const struct HcDiracParams *params,
                                 double t,
                                 struct HcEnvelope **out);

/**
 * Grid `L²` norm of both components, and the envelope time.
 *
 * # Safety
 * `env` must be a live handle; `l2` and `time` valid for writing.
 */
enum HcStatus hc_envelope_info(const struct HcEnvelope *env, double *l2, double *time);

/**
 * Copies both components into caller buffers of `len` values each.
 *
 * # Safety
 * `env` must be a live handle; `v1`, `v2` must hold `len` values.
 */
enum HcStatus hc_envelope_copy(const struct HcEnvelope *env,
                               struct HcComplex *v1,
                               struct HcComplex *v2,
                               size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HONEYCOMB_DIRAC_H */
