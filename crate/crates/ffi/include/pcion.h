#ifndef PCION_H
#define PCION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PcionPolarization {
  PCION_POLARIZATION_TE = 0,
  PCION_POLARIZATION_TM = 1,
} PcionPolarization;

/**
 * Result code of every call.
 */
typedef enum PcionStatus {
  PCION_STATUS_OK = 0,
  PCION_STATUS_NULL_POINTER = 1,
  PCION_STATUS_INVALID_INPUT = 2,
  PCION_STATUS_NUMERICAL = 3,
  PCION_STATUS_NOT_CONVERGED = 4,
  PCION_STATUS_IO = 5,
  PCION_STATUS_PANIC = 6,
} PcionStatus;

/**
 * Refractive-index model of the high-index layer.
 */
typedef struct PcionIndexModel PcionIndexModel;

/**
 * Two-layer stack: high-index layer against air.
 */
typedef struct PcionStack PcionStack;

/**
 * A and B in eV with the main convergence diagnostics.
 */
typedef struct PcionMassCoefficients {
  double a_ev;
  double b_ev;
  double tail_ev;
  double lambda_ev;
  double refinement_delta;
  /**
   * 1 when the refinement delta is within the convergence limit.
   */
  uint8_t converged;
} PcionMassCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *pcion_last_error(void);

/**
 * Library version, static string.
 */
const char *pcion_version(void);

/**
 * Frequency-independent index `n`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PcionStatus pcion_index_constant(double n, struct PcionIndexModel **out);

/**
 * `1 + c1/ω² + c2/ω⁴`, ω in eV.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PcionStatus pcion_index_sellmeier(double c1, double c2, struct PcionIndexModel **out);

/**
 * Bundled nanoparticle metamaterial with period `a_nm` and gap `g_nm`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PcionStatus pcion_index_metamaterial(double a_nm, double g_nm, struct PcionIndexModel **out);

/**
 * Two-column `omega_ev,n` CSV table with a power-law rolloff above `rolloff_ev`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum PcionStatus pcion_index_table_csv(const char *path,
                                       double rolloff_ev,
                                       double exponent,
                                       struct PcionIndexModel **out);

/**
 * Same model with n → 1 + s·(n − 1); the input handle is untouched.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid.
 */
enum PcionStatus pcion_index_scaled(const struct PcionIndexModel *model,
                                    double s,
                                    struct PcionIndexModel **out);

/**
 * n(ω).
 *
 * # Safety
 * `model` must be a live handle; `n` must be valid.
 */
enum PcionStatus pcion_index_eval(const struct PcionIndexModel *model, double omega_ev, double *n);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pcion_index_free(struct PcionIndexModel *model);

/**
 * Stack with layer thicknesses in nm; the model is copied.
 *
 * # Safety
 * `high` must be a live handle; `out` must be valid.
 */
enum PcionStatus pcion_stack_new(double d_h_nm,
                                 double d_l_nm,
                                 const struct PcionIndexModel *high,
                                 struct PcionStack **out);

/**
 * # Safety
 * `stack` must be null or a handle not yet freed.
 */
void pcion_stack_free(struct PcionStack *stack);

/**
 * Band energies (eV) below `omega_max_ev` at one k-point, ascending.
 * Writes at most `capacity` values and stores the total count in `count`.
 *
 * # Safety
 * `stack` must be live; `omegas` must hold `capacity` doubles (may be null
 * when `capacity` is 0); `count` must be valid.
 */
enum PcionStatus pcion_solve_bands(const struct PcionStack *stack,
                                   double k_rho,
                                   double k_z,
                                   enum PcionPolarization pol,
                                   double omega_max_ev,
                                   double *omegas,
                                   size_t capacity,
                                   size_t *count);

/**
 * A and B below the cutoff `lambda_ev` with Gauss orders `n_rho`, `n_z` (0 selects the default).
 * Returns `NotConverged` with `out` filled when the refinement check fails.
 *
 * # Safety
 * `stack` must be live; `out` must be valid.
 */
enum PcionStatus pcion_compute_ab(const struct PcionStack *stack,
                                  double lambda_ev,
                                  size_t n_rho,
                                  size_t n_z,
                                  struct PcionMassCoefficients *out);

/**
 * δE_ion of the state (l, m_l) for coefficients A, B (eV).
 *
 * # Safety
 * `out` must be valid.
 */
enum PcionStatus pcion_ionization_shift(double a_ev,
                                        double b_ev,
                                        uint32_t l,
                                        int32_t m_l,
                                        double *out);

/**
 * (α/π)·Λ·⟨n⟩², eV.
 *
 * # Safety
 * `out` must be valid.
 */
enum PcionStatus pcion_estimate_mass_correction(double mean_index, double lambda_ev, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCION_H */
