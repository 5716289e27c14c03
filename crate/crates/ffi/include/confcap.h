#ifndef CONFCAP_H
#define CONFCAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_INVALID_MESH = 3,
  CC_STATUS_GENERATION = 4,
  CC_STATUS_IO = 5,
  CC_STATUS_PARSE = 6,
  CC_STATUS_CHECK_FAILED = 7,
  CC_STATUS_UTF8 = 8,
  CC_STATUS_PANIC = 9,
} CcStatus;

/**
 * Opaque simplicial mesh.
 */
typedef struct CcMesh CcMesh;

/**
 * Opaque capacity result.
 */
typedef struct CcResult CcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next `cc_*` call on the same thread.
 */
const char *cc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cc_version(void);

/**
 * Meshes a domain described by a JSON `DomainSpec`.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_mesh_build(const char *spec_json, struct CcMesh **out);

/**
 * Reads a mesh in the text format.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_mesh_read(const char *path, struct CcMesh **out);

/**
 * Writes a mesh in the text format.
 *
 * # Safety
 * `mesh` must come from this library and `path` be a NUL-terminated string.
 */
enum CcStatus cc_mesh_write(const struct CcMesh *mesh, const char *path);

/**
 * # Safety
 * `mesh` must be null or come from this library.
 */
size_t cc_mesh_dim(const struct CcMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or come from this library.
 */
size_t cc_mesh_num_vertices(const struct CcMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or come from this library.
 */
size_t cc_mesh_num_simplices(const struct CcMesh *mesh);

/**
 * Copies the coordinates of vertex `index` into `coords[0..dim]`.
 *
 * # Safety
 * `coords` must have room for `cc_mesh_dim(mesh)` doubles.
 */
enum CcStatus cc_mesh_vertex(const struct CcMesh *mesh, size_t index, double *coords);

/**
 * Releases a mesh; null is ignored.
 *
 * # Safety
 * `mesh` must be null or come from this library and not be used afterwards.
 */
void cc_mesh_free(struct CcMesh *mesh);

/**
 * Solves the condenser (`plate0` = 0, `plate1` = 1) on `mesh`.
 *
 * `conformal_json` (a `ConformalFactor`) and `solver_json` (a
 * `SolverConfig`) may be null for the flat structure and default solver.
 *
 * # Safety
 * Index arrays must hold `n0` and `n1` entries; strings must be
 * NUL-terminated; `out` must be a valid pointer.
 */
enum CcStatus cc_solve_condenser(const struct CcMesh *mesh,
                                 const size_t *plate0,
                                 size_t n0,
                                 const size_t *plate1,
                                 size_t n1,
                                 const char *conformal_json,
                                 const char *solver_json,
                                 struct CcResult **out);

/**
 * # Safety
 * `result` must come from this library; `value` must be a valid pointer.
 */
enum CcStatus cc_result_value(const struct CcResult *result, double *value);

/**
 * 1 when every continuation stage converged, 0 otherwise (and for null).
 *
 * # Safety
 * `result` must be null or come from this library.
 */
int cc_result_converged(const struct CcResult *result);

/**
 * 1 when the witness meets the plate and `[0, 1]` constraints exactly.
 *
 * # Safety
 * `result` must be null or come from this library.
 */
int cc_result_admissible(const struct CcResult *result);

/**
 * Number of nodal values in the witness field.
 *
 * # Safety
 * `result` must be null or come from this library.
 */
size_t cc_result_field_len(const struct CcResult *result);

/**
 * Copies the witness field into `buf`, which must hold `len` doubles with
 * `len == cc_result_field_len(result)`.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum CcStatus cc_result_field(const struct CcResult *result, double *buf, size_t len);

/**
 * Releases a result; null is ignored.
 *
 * # Safety
 * `result` must be null or come from this library and not be used afterwards.
 */
void cc_result_free(struct CcResult *result);

/**
 * Closed-form capacity of the spherical ring `r_inner < |x| < r_outer` in R^n.
 *
 * # Safety
 * `value` must be a valid pointer.
 */
enum CcStatus cc_radial_capacity(size_t n, double r_inner, double r_outer, double *value);

/**
 * Runs a JSON experiment configuration and writes its report files into
 * `out_dir`. `passed` receives 1 when every check passed.
 *
 * # Safety
 * Strings must be NUL-terminated; `passed` must be a valid pointer.
 */
enum CcStatus cc_run_experiment(const char *config_json, const char *out_dir, int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFCAP_H */
