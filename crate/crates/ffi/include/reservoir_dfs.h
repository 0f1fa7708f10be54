#ifndef RESERVOIR_DFS_H
#define RESERVOIR_DFS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RdStatus {
  RD_STATUS_OK = 0,
  RD_STATUS_NULL_POINTER = 1,
  RD_STATUS_INVALID_ARGUMENT = 2,
  RD_STATUS_UNKNOWN_KEY = 3,
  RD_STATUS_NUMERIC_FAILURE = 4,
  RD_STATUS_NO_SOLUTION = 5,
  RD_STATUS_NOT_CYCLIC = 6,
  RD_STATUS_PANIC = 7,
} RdStatus;

typedef enum RdIon {
  RD_ION_A = 0,
  RD_ION_B = 1,
} RdIon;

/**
 * Opaque parameter set.
 */
typedef struct RdParams RdParams;

/**
 * Inversion output. `branch`: 0 Bell table, 1 superposition closed form, 2 numeric.
 */
typedef struct RdInversion {
  double phi_a1;
  double phi_b1;
  double varphi_a;
  double varphi_b;
  double r;
  double mu;
  double residual;
  int branch;
} RdInversion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t rd_last_error_message(char *buf, size_t len);

/**
 * New handle with the default parameters (`Ω1 = 10Ω2 = 100g`, `κ = 3g`,
 * `γ = g/500`). Never null.
 */
struct RdParams *rd_params_new_default(void);

/**
 * # Safety
 * `params` must be null or a handle from [`rd_params_new_default`] not yet freed.
 */
void rd_params_free(struct RdParams *params);

/**
 * Sets one parameter by name (`g`, `kappa`, `gamma_a`, `gamma_b`, `omega1`,
 * `omega2`, `phi_a1`, `phi_b1`, `varphi_a`, `varphi_b`, `n_max`). The handle
 * is left unchanged if the result fails validation.
 *
 * # Safety
 * `params` must be a live handle; `key` a NUL-terminated string.
 */
enum RdStatus rd_params_set(struct RdParams *params, const char *key, double value);

/**
 * Reads one parameter by name into `out`.
 *
 * # Safety
 * `params` must be a live handle; `key` a NUL-terminated string; `out` writable.
 */
enum RdStatus rd_params_get(const struct RdParams *params, const char *key, double *out);

/**
 * Amplitudes of `R(t)|Ψ_r⟩` into `out` (8 doubles).
 *
 * # Safety
 * `params` must be a live handle; `out` valid for 8 doubles.
 */
enum RdStatus rd_coefficients_at(const struct RdParams *params,
                                 double r,
                                 double mu,
                                 double t,
                                 double *out);

/**
 * Concurrence of a two-qubit density matrix (32 doubles, row-major).
 *
 * # Safety
 * `rho` valid for 32 doubles; `out` writable.
 */
enum RdStatus rd_concurrence(const double *rho, double *out);

/**
 * Drive phases and `(r, μ)` reproducing a normalized two-ion state (8 doubles).
 *
 * # Safety
 * `amplitudes` valid for 8 doubles; `out` writable.
 */
enum RdStatus rd_invert(const double *amplitudes, struct RdInversion *out);

/**
 * Global geometric phase over one period: the raw quadrature value and the
 * value folded into `(−π, π]`.
 *
 * # Safety
 * `params` must be a live handle; `raw` and `wrapped` writable.
 */
enum RdStatus rd_global_phase(const struct RdParams *params,
                              double r,
                              double mu,
                              size_t panels,
                              double *raw,
                              double *wrapped);

/**
 * Subsystem geometric phase of one ion; `closed_form != 0` selects the
 * closed form, otherwise quadrature with `panels` panels.
 *
 * # Safety
 * `params` must be a live handle; `out` writable.
 */
enum RdStatus rd_subsystem_phase(const struct RdParams *params,
                                 double r,
                                 double mu,
                                 enum RdIon ion,
                                 int closed_form,
                                 size_t panels,
                                 double *out);

/**
 * Fidelity curve from `|Ψ_E⟩` under ionic decay over `periods` periods,
 * sampled at `len` equally spaced points (`len ≥ 2`, including `t = 0`).
 *
 * # Safety
 * `params` must be a live handle; both outputs valid for `len` doubles.
 */
enum RdStatus rd_fidelity_curve(const struct RdParams *params,
                                double periods,
                                double safety,
                                size_t len,
                                double *t_over_period,
                                double *fidelity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESERVOIR_DFS_H */
