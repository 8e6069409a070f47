#ifndef CONFSETS_H
#define CONFSETS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_INPUT = 2,
  CS_STATUS_NON_CONVERGENCE = 3,
  CS_STATUS_DIMENSION = 4,
  CS_STATUS_SINGULAR = 5,
  CS_STATUS_PARSE = 6,
  CS_STATUS_PANIC = 99,
} CsStatus;

// Symmetric positive definite matrix `C` with its inverse and roots.
typedef struct CsGram CsGram;

// Design, response and noise level.
typedef struct CsModel CsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cs_version(void);

// Message of the last failed call on this thread, or null. Valid until
// the next library call on the same thread.
const char *cs_last_error(void);

// Builds a Gram handle from a `p x p` row-major matrix.
//
// # Safety
// `c` must point to `p * p` doubles and `out` must be writable.
enum CsStatus cs_gram_new(const double *c, size_t p, struct CsGram **out);

// # Safety
// `gram` must be null or a handle from `cs_gram_new` not yet freed.
void cs_gram_free(struct CsGram *gram);

// Dimension of a Gram handle, 0 for null.
//
// # Safety
// `gram` must be null or a live handle.
size_t cs_gram_dim(const struct CsGram *gram);

// Builds a model from an `n x p` row-major design and a response.
//
// # Safety
// `x` must point to `n * p` doubles, `y` to `n` doubles, `out` must be
// writable.
enum CsStatus cs_model_new(const double *x,
                           size_t n,
                           size_t p,
                           const double *y,
                           double sigma,
                           struct CsModel **out);

// # Safety
// `model` must be null or a handle from `cs_model_new` not yet freed.
void cs_model_free(struct CsModel *model);

// Lasso fit with penalties `lambda[0..p]`; writes `p` coefficients.
//
// # Safety
// `model` must be live, `lambda` and `beta_out` must hold `p` doubles.
enum CsStatus cs_solve_lasso(const struct CsModel *model,
                             const double *lambda,
                             size_t p,
                             double *beta_out);

// Size `k` of the centered ellipse `{z : z'Cz <= k}` with minimal
// coverage `1 - alpha`. `n = 0` selects the conservative limit.
//
// # Safety
// `gram` must be live, `lambda` must hold `p` doubles, `k_out` writable.
enum CsStatus cs_calibrate_ellipse(const struct CsGram *gram,
                                   const double *lambda,
                                   size_t p,
                                   size_t n,
                                   double sigma,
                                   double alpha,
                                   double *k_out);

// Minimal coverage report as JSON. `request` holds `lambda`, `n` (0 for
// the conservative limit), `sigma`, `shape` and `n_samples`.
//
// # Safety
// `gram` must be live, `request` a NUL-terminated UTF-8 string and
// `json_out` writable. The result must be released with `cs_string_free`.
enum CsStatus cs_min_coverage_json(const struct CsGram *gram,
                                   const char *request,
                                   uint64_t seed,
                                   char **json_out);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void cs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFSETS_H */
