#ifndef QPLOSS_H
#define QPLOSS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QplStatus {
  QPL_STATUS_OK = 0,
  QPL_STATUS_NULL_POINTER = 1,
  QPL_STATUS_INVALID_STRING = 2,
  QPL_STATUS_DOMAIN = 3,
  QPL_STATUS_PRECONDITION = 4,
  QPL_STATUS_NO_DIP = 5,
  QPL_STATUS_FIXED_POINT = 6,
  QPL_STATUS_CONFIG = 7,
  QPL_STATUS_PARSE = 8,
  QPL_STATUS_IO = 9,
  QPL_STATUS_ANALYSIS = 10,
  QPL_STATUS_PANIC = 11,
} QplStatus;

typedef enum QplGapModel {
  QPL_GAP_MODEL_CONSTANT_DELTA0 = 0,
  QPL_GAP_MODEL_TANH_INTERPOLATION = 1,
} QplGapModel;

/**
 * Superconducting film parameters.
 */
typedef struct QplMaterial QplMaterial;

/**
 * Result of a notch-resonance fit.
 */
typedef struct QplResonanceFit QplResonanceFit;

typedef struct QplSurfaceImpedance {
  double rs_ohm;
  double ls_henry;
} QplSurfaceImpedance;

/**
 * Plain values read from a [`QplResonanceFit`].
 */
typedef struct QplFitValues {
  double f_r_hz;
  double q_l;
  double q_c_abs;
  double phi0_rad;
  double q_i;
  double amplitude;
  double phase_offset_rad;
  double delay_s;
  double residual_norm;
  size_t iterations;
  bool converged;
} QplFitValues;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *qpl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qpl_version(void);

/**
 * Creates a material. `name` is a NUL-terminated UTF-8 string; N0 is per
 * m³ per eV.
 *
 * # Safety
 * `name` must be null or a valid C string; `out` must be null or writable.
 */
enum QplStatus qpl_material_new(const char *name,
                                double tc_k,
                                double n0_per_m3_ev,
                                double sigma_n_s_per_m,
                                enum QplGapModel gap_model,
                                struct QplMaterial **out);

/**
 * # Safety
 * `m` must be null or a handle from [`qpl_material_new`] not yet freed.
 */
void qpl_material_free(struct QplMaterial *m);

/**
 * σ1/σn at temperature `t_k` and frequency `f_hz`.
 *
 * # Safety
 * `m` must be a live material handle; `out` must be writable.
 */
enum QplStatus qpl_sigma1_ratio(const struct QplMaterial *m, double t_k, double f_hz, double *out);

/**
 * σ2/σn at temperature `t_k` and frequency `f_hz`.
 *
 * # Safety
 * `m` must be a live material handle; `out` must be writable.
 */
enum QplStatus qpl_sigma2_ratio(const struct QplMaterial *m, double t_k, double f_hz, double *out);

/**
 * Thermal quasiparticle density in µm⁻³.
 *
 * # Safety
 * `m` must be a live material handle; `out` must be writable.
 */
enum QplStatus qpl_nqp_thermal(const struct QplMaterial *m, double t_k, double *out);

/**
 * # Safety
 * `m` must be a live material handle; `out` must be writable.
 */
enum QplStatus qpl_surface_impedance(const struct QplMaterial *m,
                                     double t_k,
                                     double f_hz,
                                     struct QplSurfaceImpedance *out);

/**
 * Quasiparticle loss of a resonator with kinetic-inductance fraction
 * `alpha`, from the thermal density.
 *
 * # Safety
 * `m` must be a live material handle; `out` must be writable.
 */
enum QplStatus qpl_delta_qp_theory(const struct QplMaterial *m,
                                   double f_r_hz,
                                   double alpha,
                                   double t_k,
                                   double *out);

/**
 * Quasiparticle density in µm⁻³ implied by a quasiparticle loss.
 *
 * # Safety
 * `m` must be a live material handle; `out` must be writable.
 */
enum QplStatus qpl_nqp_from_delta(const struct QplMaterial *m,
                                  double f_r_hz,
                                  double alpha,
                                  double t_k,
                                  double delta_qp,
                                  double *out);

/**
 * Photon number 2·Q_l²·P/(|Q_c|·ħ·ω²) at chip-plane power `p_dbm`.
 */
double qpl_photon_number(double q_l, double q_c_abs, double f_r_hz, double p_dbm);

/**
 * Fits the notch model to `n` samples of S21 given as separate real and
 * imaginary arrays.
 *
 * # Safety
 * The three arrays must each hold `n` readable values; `out` must be
 * writable.
 */
enum QplStatus qpl_fit_resonance(const double *freqs_hz,
                                 const double *s21_re,
                                 const double *s21_im,
                                 size_t n,
                                 struct QplResonanceFit **out);

/**
 * # Safety
 * `fit` must be a live fit handle; `out` must be writable.
 */
enum QplStatus qpl_fit_values(const struct QplResonanceFit *fit, struct QplFitValues *out);

/**
 * # Safety
 * `fit` must be null or a handle from [`qpl_fit_resonance`] not yet freed.
 */
void qpl_fit_free(struct QplResonanceFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPLOSS_H */
