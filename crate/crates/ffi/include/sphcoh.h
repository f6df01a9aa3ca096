#ifndef SPHCOH_H
#define SPHCOH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SphcohStatus {
  SPHCOH_STATUS_OK = 0,
  SPHCOH_STATUS_NULL_POINTER = 1,
  SPHCOH_STATUS_INVALID_PARAMETER = 2,
  SPHCOH_STATUS_UNSUPPORTED_DIMENSION = 3,
  SPHCOH_STATUS_DIMENSION_MISMATCH = 4,
  SPHCOH_STATUS_CONSTRAINT_VIOLATION = 5,
  SPHCOH_STATUS_NON_CONVERGENCE = 6,
  SPHCOH_STATUS_CUTOFF_INSUFFICIENT = 7,
  SPHCOH_STATUS_OVERFLOW = 8,
  SPHCOH_STATUS_QUADRATURE = 9,
  SPHCOH_STATUS_BUFFER_TOO_SMALL = 10,
  SPHCOH_STATUS_PANIC = 11,
} SphcohStatus;

/**
 * A coherent state with its label on the unit complex sphere.
 */
typedef struct SphcohCoherent SphcohCoherent;

/**
 * Physical parameters `(d, r, m, ω, ħ)`.
 */
typedef struct SphcohParams SphcohParams;

/**
 * Phase-space quadrature grid.
 */
typedef struct SphcohQuadrature SphcohQuadrature;

/**
 * A position-space state: basis combination, zonal harmonic or point mass.
 */
typedef struct SphcohState SphcohState;

typedef struct SphcohComplex {
  double re;
  double im;
} SphcohComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sphcoh_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated, truncated
 * to `len − 1` bytes) and returns the full message length in bytes. Pass a null `buf` to
 * query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sphcoh_last_error_message(char *buf, size_t len);

/**
 * `ρ_τ(θ)` on `S^dim` at a complex angle.
 *
 * # Safety
 * `out` must point to a writable `SphcohComplex`.
 */
enum SphcohStatus sphcoh_rho(size_t dim,
                             double tau,
                             struct SphcohComplex theta,
                             struct SphcohComplex *out);

/**
 * `ν(s, R)` on `H^dim`.
 *
 * # Safety
 * `out` must point to a writable `double`.
 */
enum SphcohStatus sphcoh_nu(size_t dim, double s, double radius, double *out);

/**
 * # Safety
 * `out` must point to a writable handle pointer.
 */
enum SphcohStatus sphcoh_params_new(size_t dim,
                                    double radius,
                                    double mass,
                                    double omega,
                                    double hbar,
                                    struct SphcohParams **out);

/**
 * Parameters with `r = m = ω = 1` and `ħ = τ`.
 *
 * # Safety
 * `out` must point to a writable handle pointer.
 */
enum SphcohStatus sphcoh_params_dimensionless(size_t dim, double tau, struct SphcohParams **out);

/**
 * `τ = ħ/(mωr²)`, or NaN for a null handle.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
double sphcoh_params_tau(const struct SphcohParams *params);

/**
 * # Safety
 * `params` must be null or a handle not yet freed.
 */
void sphcoh_params_free(struct SphcohParams *params);

/**
 * Complexifies the phase point `(x, p)` (each of length `dim + 1`) and builds its
 * coherent state.
 *
 * # Safety
 * `x` and `p` must hold `len` doubles; `out` must point to a writable handle pointer.
 */
enum SphcohStatus sphcoh_coherent_new(const struct SphcohParams *params,
                                      const double *x,
                                      const double *p,
                                      size_t len,
                                      struct SphcohCoherent **out);

/**
 * Writes the label `a ∈ S^d_C` (physical units) into `out[0..len]`.
 *
 * # Safety
 * `out` must hold `len` writable elements.
 */
enum SphcohStatus sphcoh_coherent_label(const struct SphcohCoherent *state,
                                        struct SphcohComplex *out,
                                        size_t len);

/**
 * `ψ_a(x)` at a point `x` on the sphere of radius `r`.
 *
 * # Safety
 * `x` must hold `len` doubles; `out` must be writable.
 */
enum SphcohStatus sphcoh_coherent_wavefunction(const struct SphcohCoherent *state,
                                               const double *x,
                                               size_t len,
                                               struct SphcohComplex *out);

/**
 * `‖ψ_a‖²`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SphcohStatus sphcoh_coherent_norm_squared(const struct SphcohCoherent *state, double *out);

/**
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void sphcoh_coherent_free(struct SphcohCoherent *state);

/**
 * Phase-space grid on `S^dim` at time `tau`, exact for states of degree `≤ max_degree`.
 *
 * # Safety
 * `out` must point to a writable handle pointer.
 */
enum SphcohStatus sphcoh_quadrature_new(size_t dim,
                                        double tau,
                                        size_t max_degree,
                                        struct SphcohQuadrature **out);

/**
 * Number of phase-space nodes, or 0 for a null handle.
 *
 * # Safety
 * `quad` must be null or a live handle.
 */
size_t sphcoh_quadrature_node_count(const struct SphcohQuadrature *quad);

/**
 * # Safety
 * `quad` must be null or a handle not yet freed.
 */
void sphcoh_quadrature_free(struct SphcohQuadrature *quad);

/**
 * Parses a state from its JSON serialization.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must point to a writable handle pointer.
 */
enum SphcohStatus sphcoh_state_from_json(const char *json, struct SphcohState **out);

/**
 * Unit-norm random state of degree `≤ max_degree`, reproducible from `seed`.
 *
 * # Safety
 * `out` must point to a writable handle pointer.
 */
enum SphcohStatus sphcoh_state_random(size_t dim,
                                      size_t max_degree,
                                      uint64_t seed,
                                      struct SphcohState **out);

/**
 * `f(x)` at a unit vector `x`.
 *
 * # Safety
 * `x` must hold `len` doubles; `out` must be writable.
 */
enum SphcohStatus sphcoh_state_eval(const struct SphcohState *state,
                                    const double *x,
                                    size_t len,
                                    struct SphcohComplex *out);

/**
 * Segal–Bargmann transform `(C f)(a)` at `a` on the unit complex sphere.
 *
 * # Safety
 * `a` must hold `len` elements; `out` must be writable.
 */
enum SphcohStatus sphcoh_state_transform(const struct SphcohState *state,
                                         double tau,
                                         const struct SphcohComplex *a,
                                         size_t len,
                                         struct SphcohComplex *out);

/**
 * Relative L² error of inverse(transform(f)) against `f`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SphcohStatus sphcoh_round_trip_error(const struct SphcohState *state,
                                          const struct SphcohQuadrature *quad,
                                          double *out);

/**
 * Total Husimi mass of `f` over the grid (1 for a unit state).
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SphcohStatus sphcoh_husimi_mass(const struct SphcohState *state,
                                     const struct SphcohQuadrature *quad,
                                     double *out);

/**
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void sphcoh_state_free(struct SphcohState *state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHCOH_H */
