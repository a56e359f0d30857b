#ifndef RQMCIS_H
#define RQMCIS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum RqmcisStatus {
  RQMCIS_STATUS_OK = 0,
  RQMCIS_STATUS_NULL_POINTER = 1,
  RQMCIS_STATUS_INVALID_ARGUMENT = 2,
  RQMCIS_STATUS_DOMAIN = 3,
  RQMCIS_STATUS_NOT_POSITIVE_DEFINITE = 4,
  RQMCIS_STATUS_SINGULAR = 5,
  RQMCIS_STATUS_NON_CONVERGENCE = 6,
  RQMCIS_STATUS_NON_FINITE = 7,
  RQMCIS_STATUS_CONFIG = 8,
  RQMCIS_STATUS_IO = 9,
  RQMCIS_STATUS_PANIC = 10,
} RqmcisStatus;

// Point generator for [`rqmcis_pointset_new`].
typedef enum RqmcisPointKind {
  RQMCIS_POINT_KIND_SOBOL = 0,
  RQMCIS_POINT_KIND_SCRAMBLED_SOBOL = 1,
  RQMCIS_POINT_KIND_IID = 2,
} RqmcisPointKind;

// Proposal rule for [`rqmcis_build_proposal`].
typedef enum RqmcisMethod {
  RQMCIS_METHOD_PRIOR = 0,
  RQMCIS_METHOD_ODIS = 1,
  RQMCIS_METHOD_LAPLACE = 2,
} RqmcisMethod;

// Opaque Gaussian base measure.
typedef struct RqmcisMeasure RqmcisMeasure;

// Opaque point set.
typedef struct RqmcisPointSet RqmcisPointSet;

// Opaque Gaussian or Student-t proposal.
typedef struct RqmcisProposal RqmcisProposal;

// `log G(z)` for `z` of length `d`; return `-INFINITY` where `G = 0`.
typedef double (*RqmcisLogIntegrandFn)(const double *z, size_t d, void *user);

// Writes the gradient of `log G` at `z` into `out` (length `d`).
typedef void (*RqmcisGradFn)(const double *z, size_t d, double *out, void *user);

// Writes the Hessian of `log G` at `z` into `out` (`d * d`, row-major).
typedef void (*RqmcisHessFn)(const double *z, size_t d, double *out, void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len - 1` bytes). Returns the full message length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t rqmcis_last_error_message(char *buf, size_t len);

// Creates `2^m` points in dimension `d`. `seed` is ignored for `Sobol`.
//
// # Safety
// `out` must be valid for writing a pointer.
enum RqmcisStatus rqmcis_pointset_new(enum RqmcisPointKind kind,
                                      uint32_t m,
                                      size_t d,
                                      uint64_t seed,
                                      struct RqmcisPointSet **out_ps);

// # Safety
// `ps` must be null or a handle from [`rqmcis_pointset_new`] not yet freed.
void rqmcis_pointset_free(struct RqmcisPointSet *ps);

// Number of points, or 0 for a null handle.
//
// # Safety
// `ps` must be null or a live handle.
size_t rqmcis_pointset_len(const struct RqmcisPointSet *ps);

// Dimension, or 0 for a null handle.
//
// # Safety
// `ps` must be null or a live handle.
size_t rqmcis_pointset_dim(const struct RqmcisPointSet *ps);

// Copies the points row-major into `buf`, which must hold `len * dim` values.
//
// # Safety
// `ps` must be a live handle and `buf` valid for `cap` doubles.
enum RqmcisStatus rqmcis_pointset_copy(const struct RqmcisPointSet *ps, double *buf, size_t cap);

// `Phi^-1(u)` for `u` in `(0, 1)`.
//
// # Safety
// `out` must be valid for writing.
enum RqmcisStatus rqmcis_inv_norm_cdf(double u, double *out_z);

// Lower incomplete gamma `gamma_alpha(x)`.
//
// # Safety
// `out` must be valid for writing.
enum RqmcisStatus rqmcis_lower_inc_gamma(double alpha, double x, double *out_y);

// Inverse of [`rqmcis_lower_inc_gamma`] in `x` for `y` in `(0, Gamma(alpha))`.
//
// # Safety
// `out` must be valid for writing.
enum RqmcisStatus rqmcis_inv_lower_inc_gamma(double alpha, double y, double *out_x);

// Base measure `N(mu0, sigma0)`.
//
// # Safety
// `mu0` must hold `d` values, `sigma0` `d * d`, and `out` be writable.
enum RqmcisStatus rqmcis_measure_new(size_t d,
                                     const double *mu0,
                                     const double *sigma0,
                                     struct RqmcisMeasure **out_m);

// # Safety
// `m` must be null or a live handle.
void rqmcis_measure_free(struct RqmcisMeasure *m);

// Proposal `mu + L x`; `nu <= 0` selects the Gaussian family, `nu > 0` Student-t.
//
// # Safety
// `mu` must hold `d` values, `root_l` `d * d`, and `out` be writable.
enum RqmcisStatus rqmcis_proposal_new(size_t d,
                                      const double *mu,
                                      const double *root_l,
                                      double nu,
                                      struct RqmcisProposal **out_p);

// # Safety
// `p` must be null or a live handle.
void rqmcis_proposal_free(struct RqmcisProposal *p);

// Dimension of a proposal, or 0 for a null handle.
//
// # Safety
// `p` must be null or a live handle.
size_t rqmcis_proposal_dim(const struct RqmcisProposal *p);

// Copies the proposal mean (`d` values) and root (`d * d`, row-major).
// Either output may be null.
//
// # Safety
// Non-null outputs must be valid for the stated lengths.
enum RqmcisStatus rqmcis_proposal_params(const struct RqmcisProposal *p,
                                         double *mu_out,
                                         double *root_out);

// Log likelihood ratio at the standardized input `x` for either family.
//
// # Safety
// Handles must be live and `x` hold `d` values.
enum RqmcisStatus rqmcis_log_lr(const struct RqmcisProposal *p,
                                const struct RqmcisMeasure *base,
                                const double *x,
                                double *out_lr);

// Eigenvalues of `L^T Sigma0^-1 L` (ascending, `d` values into
// `eigenvalues` unless null) and whether all are `>= 1 - tol`.
//
// # Safety
// Handles must be live; outputs valid or null where allowed.
enum RqmcisStatus rqmcis_bgc_diagnostic(const struct RqmcisProposal *p,
                                        const struct RqmcisMeasure *base,
                                        double tol,
                                        double *eigenvalues,
                                        double *min_eig,
                                        bool *passes);

// `(1/N) sum G(mu + L x_i) W(x_i)` with `G = exp(log_g)`. Gaussian proposals
// need `d`-dimensional points, Student-t proposals `d + 1`.
//
// # Safety
// Handles must be live; `log_g` must be safe to call with `user`.
enum RqmcisStatus rqmcis_is_estimate(const struct RqmcisProposal *p,
                                     const struct RqmcisMeasure *base,
                                     const struct RqmcisPointSet *ps,
                                     RqmcisLogIntegrandFn log_g,
                                     void *user,
                                     double *out_est);

// Builds a PriorIS, ODIS or LapIS proposal for `G = exp(log_g)`;
// `nu > 0` converts it to Student-t. ODIS needs `grad`, LapIS also `hess`.
//
// # Safety
// Handles must be live; callbacks must be safe to call with `user`.
enum RqmcisStatus rqmcis_build_proposal(enum RqmcisMethod method,
                                        const struct RqmcisMeasure *base,
                                        RqmcisLogIntegrandFn log_g,
                                        RqmcisGradFn grad,
                                        RqmcisHessFn hess,
                                        void *user,
                                        double nu,
                                        struct RqmcisProposal **out_p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RQMCIS_H */
