#ifndef DHIF_H
#define DHIF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Coefficient field of the operator.
 */
typedef enum DhifField {
  DHIF_FIELD_CONSTANT = 0,
  DHIF_FIELD_RANDOM_HIGH_CONTRAST = 1,
  DHIF_FIELD_CHECKERBOARD = 2,
} DhifField;

/**
 * Result code of every fallible call.
 */
typedef enum DhifStatus {
  DHIF_STATUS_OK = 0,
  DHIF_STATUS_NULL_POINTER = 1,
  DHIF_STATUS_INVALID_ARGUMENT = 2,
  DHIF_STATUS_LENGTH_MISMATCH = 3,
  DHIF_STATUS_FACTORIZATION = 4,
  DHIF_STATUS_SOLVE = 5,
  DHIF_STATUS_PANIC = 6,
} DhifStatus;

/**
 * Factorization of a [`DhifOperator`].
 */
typedef struct DhifFactorization DhifFactorization;

/**
 * Assembled periodic operator on an `n³` grid.
 */
typedef struct DhifOperator DhifOperator;

/**
 * Outcome of a preconditioned GMRES solve.
 */
typedef struct DhifSolveInfo {
  size_t iterations;
  bool converged;
  double relative_residual;
} DhifSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *dhif_last_error(void);

/**
 * Assembles the operator on an `n³` periodic grid.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum DhifStatus dhif_operator_new(size_t n,
                                  enum DhifField field,
                                  uint64_t seed,
                                  struct DhifOperator **out);

/**
 * # Safety
 * `op` must be null or a handle from [`dhif_operator_new`] not yet freed.
 */
void dhif_operator_free(struct DhifOperator *op);

/**
 * Number of unknowns, `n³`; zero for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
size_t dhif_operator_dim(const struct DhifOperator *op);

/**
 * `y = A x`.
 *
 * # Safety
 * `x` and `y` must be valid for `len` elements and must not overlap.
 */
enum DhifStatus dhif_operator_apply(const struct DhifOperator *op,
                                    const double *x,
                                    double *y,
                                    size_t len);

/**
 * Factors `op` with ID precision `eps` (`0` for an exact factorization).
 *
 * # Safety
 * `op` must be a live handle and `out` valid for one pointer write.
 */
enum DhifStatus dhif_factorize(const struct DhifOperator *op,
                               double eps,
                               struct DhifFactorization **out);

/**
 * # Safety
 * `f` must be null or a handle from [`dhif_factorize`] not yet freed.
 */
void dhif_factorization_free(struct DhifFactorization *f);

/**
 * Number of points left at the top level; zero for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
size_t dhif_factorization_root_size(const struct DhifFactorization *f);

/**
 * Bytes of stored factor entries; zero for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
size_t dhif_factorization_bytes(const struct DhifFactorization *f);

/**
 * `y = F⁻¹ x`.
 *
 * # Safety
 * `x` and `y` must be valid for `len` elements and must not overlap.
 */
enum DhifStatus dhif_apply_inverse(const struct DhifFactorization *f,
                                   const double *x,
                                   double *y,
                                   size_t len);

/**
 * `‖(I − F⁻¹A)x‖/‖x‖` for a Gaussian `x` drawn from `seed`.
 *
 * # Safety
 * Handles must be live and `out` valid for one write.
 */
enum DhifStatus dhif_solve_error(const struct DhifOperator *op,
                                 const struct DhifFactorization *f,
                                 uint64_t seed,
                                 double *out);

/**
 * Solves `A u = b` by GMRES preconditioned with `F⁻¹`. `u` receives the
 * final iterate even when the solve does not converge; `info` may be null.
 *
 * # Safety
 * `b` and `u` must be valid for `len` elements; `info` null or valid.
 */
enum DhifStatus dhif_gmres(const struct DhifOperator *op,
                           const struct DhifFactorization *f,
                           const double *b,
                           double *u,
                           size_t len,
                           double tol,
                           size_t max_iter,
                           struct DhifSolveInfo *info);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DHIF_H */
