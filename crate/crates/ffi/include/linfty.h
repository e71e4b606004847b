#ifndef LINFTY_H
#define LINFTY_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Status codes. Zero is success.
typedef enum LinftyStatus {
  LINFTY_STATUS_OK = 0,
  LINFTY_STATUS_NULL_POINTER = 1,
  LINFTY_STATUS_INVALID_ARGUMENT = 2,
  LINFTY_STATUS_BAD_SHAPE = 3,
  LINFTY_STATUS_EMPTY_INTERIOR = 4,
  LINFTY_STATUS_IO = 5,
  LINFTY_STATUS_SIZE_MISMATCH = 6,
  LINFTY_STATUS_ZERO_FUNCTION = 7,
  LINFTY_STATUS_STADIUM_DOMAIN = 8,
  LINFTY_STATUS_SIGNED_MEASURE = 9,
  LINFTY_STATUS_UNBALANCED_MASS = 10,
  LINFTY_STATUS_ZERO_DUAL = 11,
  LINFTY_STATUS_SOLVER_FAILURE = 12,
  LINFTY_STATUS_BUFFER_TOO_SMALL = 13,
  LINFTY_STATUS_PANIC = 14,
} LinftyStatus;

// Rasterized domain.
typedef struct LinftyDomain LinftyDomain;

// Nodal field on a domain.
typedef struct LinftyField LinftyField;

// Signed nodal measure on a domain.
typedef struct LinftyMeasure LinftyMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *linfty_version(void);

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next library call on the same thread.
const char *linfty_last_error(void);

// Rasterizes a shape given as JSON (the shape-file format) at spacing `h`.
//
// # Safety
// `shape_json` must be a NUL-terminated string; `out` must be writable.
enum LinftyStatus linfty_domain_new(const char *shape_json, double h, struct LinftyDomain **out);

// Rasterizes a shape file at spacing `h`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum LinftyStatus linfty_domain_load(const char *path, double h, struct LinftyDomain **out);

// # Safety
// `domain` must come from this library or be null.
void linfty_domain_free(struct LinftyDomain *domain);

// Active node count (Interior plus Boundary).
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_domain_len(const struct LinftyDomain *domain, size_t *out);

// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_domain_spacing(const struct LinftyDomain *domain, double *out);

// 1 for Interior nodes, 0 for Boundary nodes, in node order.
//
// # Safety
// `buf` must hold `cap` bytes; `len_out` may be null.
enum LinftyStatus linfty_domain_interior_mask(const struct LinftyDomain *domain,
                                              uint8_t *buf,
                                              size_t cap,
                                              size_t *len_out);

// Node positions as interleaved `x, y` pairs (`y = 0` in 1D); `cap` and
// `len_out` count doubles.
//
// # Safety
// `buf` must hold `cap` doubles; `len_out` may be null.
enum LinftyStatus linfty_domain_positions(const struct LinftyDomain *domain,
                                          double *buf,
                                          size_t cap,
                                          size_t *len_out);

// Field from `len` nodal values; `len` must equal the domain's node count.
//
// # Safety
// `values` must hold `len` doubles.
enum LinftyStatus linfty_field_new(const struct LinftyDomain *domain,
                                   const double *values,
                                   size_t len,
                                   struct LinftyField **out);

// # Safety
// `field` must come from this library or be null.
void linfty_field_free(struct LinftyField *field);

// # Safety
// `buf` must hold `cap` doubles; `len_out` may be null.
enum LinftyStatus linfty_field_values(const struct LinftyField *field,
                                      double *buf,
                                      size_t cap,
                                      size_t *len_out);

// Graph distance to the boundary.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_distance(const struct LinftyDomain *domain, struct LinftyField **out);

// Inradius of the domain: the maximum of the distance function.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_inradius(const struct LinftyDomain *domain, double *out);

// Discrete Lipschitz constant of a field.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_lip_constant(const struct LinftyField *field, double *out);

// Rayleigh quotient `Lip(u) / max|u|`.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_rayleigh(const struct LinftyField *field, double *out);

// Nodes whose distance value lies within `tol` of the inradius.
//
// # Safety
// `buf` must hold `cap` entries; `len_out` may be null.
enum LinftyStatus linfty_high_ridge(const struct LinftyDomain *domain,
                                    double tol,
                                    size_t *buf,
                                    size_t cap,
                                    size_t *len_out);

// Discrete first p-eigenpair from the distance-function start; the
// eigenfunction is normalized to `max|u| = 1`.
//
// # Safety
// Pointers must be valid; `u_out` may be null.
enum LinftyStatus linfty_p_eigenpair(const struct LinftyDomain *domain,
                                     double p,
                                     double tol,
                                     double *lambda_out,
                                     struct LinftyField **u_out);

// Infinity-harmonic extension of `values` prescribed at `nodes`.
//
// # Safety
// `nodes` and `values` must hold `n` entries.
enum LinftyStatus linfty_infinity_harmonic(const struct LinftyDomain *domain,
                                           const size_t *nodes,
                                           const double *values,
                                           size_t n,
                                           double tol,
                                           struct LinftyField **out);

// Sign-changing Lipschitz minimizer built from the high ridge with
// tolerance `ridge_tol`; fails with `StadiumDomain` on stadium-like shapes.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_sign_changing(const struct LinftyDomain *domain,
                                       double ridge_tol,
                                       struct LinftyField **out);

// Measure from `len` nodal weights.
//
// # Safety
// `weights` must hold `len` doubles.
enum LinftyStatus linfty_measure_new(const struct LinftyDomain *domain,
                                     const double *weights,
                                     size_t len,
                                     struct LinftyMeasure **out);

// # Safety
// `measure` must come from this library or be null.
void linfty_measure_free(struct LinftyMeasure *measure);

// `J*(μ) = Σ μ(x) d(x)` for a nonnegative measure.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_j_star(const struct LinftyMeasure *measure, double *out);

// Dual functional computed by min-cost flow to a free boundary; accepts
// signed measures.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_j_star_flow(const struct LinftyMeasure *measure, double *out);

// Wasserstein-1 distance between two probability measures on one domain.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_w1(const struct LinftyMeasure *mu,
                            const struct LinftyMeasure *rho,
                            double *out);

// Kantorovich–Rubinstein norm; `partial != 0` selects the variant with a
// free boundary.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_kr_norm(const struct LinftyMeasure *measure, int32_t partial, double *out);

// Dual Rayleigh quotient `‖μ‖_TV / J*(μ)`.
//
// # Safety
// Pointers must be valid.
enum LinftyStatus linfty_dual_rayleigh(const struct LinftyMeasure *measure, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINFTY_H */
