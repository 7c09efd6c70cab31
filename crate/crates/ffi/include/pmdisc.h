#ifndef PMDISC_H
#define PMDISC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes. Zero is success.
 */
typedef enum PmStatus {
  PM_STATUS_OK = 0,
  /**
   * a required pointer argument was null
   */
  PM_STATUS_NULL_POINTER = 1,
  /**
   * buffer length or party dimensions inconsistent
   */
  PM_STATUS_DIMENSION = 2,
  /**
   * the matrix is not a valid process matrix (or not Hermitian)
   */
  PM_STATUS_INVALID = 3,
  /**
   * unreadable or malformed input file
   */
  PM_STATUS_INPUT = 4,
  /**
   * solver or eigensolver failure
   */
  PM_STATUS_NUMERICAL = 5,
  /**
   * an operation precondition failed, e.g. operands are not combs
   */
  PM_STATUS_PRECONDITION = 6,
  /**
   * internal panic caught at the boundary
   */
  PM_STATUS_PANIC = 7,
} PmStatus;

/**
 * Process-matrix classes for [`pm_distance`] and [`pm_classify`].
 */
typedef enum PmClass {
  PM_CLASS_FREE = 0,
  PM_CLASS_COMB_AB = 1,
  PM_CLASS_COMB_BA = 2,
  PM_CLASS_SEPARABLE = 3,
  PM_CLASS_UNCLASSIFIED = 4,
} PmClass;

/**
 * Opaque process matrix.
 */
typedef struct PmProcessMatrix PmProcessMatrix;

/**
 * Residuals of the validity conditions.
 */
typedef struct PmValidation {
  /**
   * 1 if valid, 0 otherwise
   */
  int32_t valid;
  double min_eigenvalue;
  double lv_residual;
  double trace_residual;
} PmValidation;

/**
 * Summary of a solved program.
 */
typedef struct PmSolveInfo {
  double value;
  double gap;
  double residual;
  size_t iterations;
} PmSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call into this library.
 */
const char *pm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pm_version(void);

/**
 * Builds a process matrix from row-major buffers, checking validity with
 * tolerance `tol`. `im` may be null for real matrices.
 *
 * # Safety
 * `dims` must point to 4 values; `re` (and `im` if non-null) to `len`
 * values; `out` must be writable.
 */
enum PmStatus pm_process_matrix_new(const size_t *dims,
                                    const double *re,
                                    const double *im,
                                    size_t len,
                                    double tol,
                                    struct PmProcessMatrix **out);

/**
 * Loads a process matrix from a MatrixFile JSON document.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PmStatus pm_process_matrix_load(const char *path, double tol, struct PmProcessMatrix **out);

/**
 * The causally non-separable qubit example.
 *
 * # Safety
 * `out` must be writable.
 */
enum PmStatus pm_process_matrix_cns(struct PmProcessMatrix **out);

/**
 * 1/(d_AI d_BI) · 1 for the given dimensions.
 *
 * # Safety
 * `dims` must point to 4 values; `out` must be writable.
 */
enum PmStatus pm_process_matrix_maximally_mixed(const size_t *dims, struct PmProcessMatrix **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `w` must come from this library and not be used afterwards.
 */
void pm_process_matrix_free(struct PmProcessMatrix *w);

/**
 * Side length of the matrix, 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle.
 */
size_t pm_process_matrix_side(const struct PmProcessMatrix *w);

/**
 * Writes the party dimensions (A_I, A_O, B_I, B_O) to `dims`.
 *
 * # Safety
 * `w` must be a live handle; `dims` must have room for 4 values.
 */
enum PmStatus pm_process_matrix_dims(const struct PmProcessMatrix *w, size_t *dims);

/**
 * Copies the matrix into row-major buffers of length side².
 *
 * # Safety
 * `w` must be a live handle; `re` and `im` must have room for `len` values.
 */
enum PmStatus pm_process_matrix_copy(const struct PmProcessMatrix *w,
                                     double *re,
                                     double *im,
                                     size_t len);

/**
 * Checks the validity conditions without constructing a handle. An
 * invalid matrix is not an error: the status is `Ok` and `valid` is 0.
 *
 * # Safety
 * As for [`pm_process_matrix_new`]; `report` must be writable.
 */
enum PmStatus pm_validate(const size_t *dims,
                          const double *re,
                          const double *im,
                          size_t len,
                          double tol,
                          struct PmValidation *report);

/**
 * Optimal success probability for discriminating `w0` from `w1` with
 * equal priors.
 *
 * # Safety
 * `w0`, `w1` must be live handles; `out` must be writable.
 */
enum PmStatus pm_p_succ(const struct PmProcessMatrix *w0,
                        const struct PmProcessMatrix *w1,
                        struct PmSolveInfo *out);

/**
 * Optimal success probability over adaptive strategies; both operands must
 * be A-before-B combs.
 *
 * # Safety
 * As for [`pm_p_succ`].
 */
enum PmStatus pm_p_adapt(const struct PmProcessMatrix *w0,
                         const struct PmProcessMatrix *w1,
                         struct PmSolveInfo *out);

/**
 * Distance from `w` to a class. If `closest` is non-null it receives a new
 * handle to the closest member.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable; `closest` null or writable.
 */
enum PmStatus pm_distance(const struct PmProcessMatrix *w,
                          enum PmClass class_,
                          struct PmSolveInfo *out,
                          struct PmProcessMatrix **closest);

/**
 * Base norm of a Hermitian operator on the four party systems.
 *
 * # Safety
 * As for [`pm_process_matrix_new`]; `out` must be writable.
 */
enum PmStatus pm_base_norm(const size_t *dims,
                           const double *re,
                           const double *im,
                           size_t len,
                           double *out);

/**
 * Classifies `w`, writing the class to `out`.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum PmStatus pm_classify(const struct PmProcessMatrix *w, double tol, enum PmClass *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PMDISC_H */
