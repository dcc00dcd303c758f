#ifndef SGCALC_H
#define SGCALC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgOperatorKind {
  SG_OPERATOR_KIND_LAPLACIAN = 0,
  SG_OPERATOR_KIND_FORM_LAPLACIAN = 1,
  SG_OPERATOR_KIND_DIRAC = 2,
  SG_OPERATOR_KIND_MAGNETIC_LINEAR = 3,
  SG_OPERATOR_KIND_MAGNETIC_PEIERLS = 4,
} SgOperatorKind;

typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_INVALID_ARGUMENT = 1,
  SG_STATUS_RESOURCE_LIMIT = 2,
  SG_STATUS_NUMERICAL = 3,
  SG_STATUS_PARSE = 4,
  SG_STATUS_IO = 5,
  SG_STATUS_NULL_POINTER = 6,
  SG_STATUS_BUFFER_TOO_SMALL = 7,
  SG_STATUS_PANIC = 8,
} SgStatus;

/**
 * Opaque level-n graph.
 */
typedef struct SgGraph SgGraph;

/**
 * Opaque Hermitian operator matrix.
 */
typedef struct SgOperator SgOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `len`) and returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t sg_last_error_message(char *buf, size_t len);

/**
 * Static NUL-terminated version string.
 */
const char *sg_version(void);

/**
 * Builds the level-`level` graph, refusing levels above `max_level`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum SgStatus sg_graph_new(size_t level, size_t max_level, struct SgGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from [`sg_graph_new`] not yet freed.
 */
void sg_graph_free(struct SgGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle; outputs must be null or writable.
 */
enum SgStatus sg_graph_counts(const struct SgGraph *g,
                              size_t *level,
                              size_t *vertices,
                              size_t *edges);

/**
 * Assembles an operator on `g`. `flux` is the holonomy put on every cell
 * for the magnetic kinds and ignored otherwise.
 *
 * # Safety
 * `g` must be a live graph handle and `out` valid for a pointer write.
 */
enum SgStatus sg_operator_new(const struct SgGraph *g,
                              enum SgOperatorKind kind,
                              double flux,
                              struct SgOperator **out);

/**
 * # Safety
 * `op` must be null or a handle from [`sg_operator_new`] not yet freed.
 */
void sg_operator_free(struct SgOperator *op);

/**
 * Matrix dimension, or 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live operator handle.
 */
size_t sg_operator_dim(const struct SgOperator *op);

/**
 * Writes the `count` smallest eigenvalues (all when `count` is 0) in
 * ascending order into `values`. `written` receives the number required;
 * when `capacity` is smaller, nothing is written and the status is
 * `BufferTooSmall`.
 *
 * # Safety
 * `op` must be a live operator handle, `values` valid for `capacity`
 * doubles, `written` valid for a write.
 */
enum SgStatus sg_operator_eigenvalues(const struct SgOperator *op,
                                      size_t count,
                                      double tol,
                                      double *values,
                                      size_t capacity,
                                      size_t *written);

/**
 * Runs the invariant suite; `passed` receives 1 if every check passed.
 *
 * # Safety
 * `passed` must be valid for a write.
 */
enum SgStatus sg_verify(size_t level, uint64_t seed, int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGCALC_H */
