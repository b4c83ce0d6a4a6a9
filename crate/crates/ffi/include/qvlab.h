#ifndef QVLAB_H
#define QVLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `QV_OK` is zero; every library error has its own code.
 */
typedef enum {
  QV_OK = 0,
  QV_NULL_POINTER = 1,
  QV_BUFFER_TOO_SMALL = 2,
  QV_PANIC = 3,
  QV_INVALID_INPUT = 10,
  QV_INVALID_STEP = 11,
  QV_OUT_OF_DOMAIN = 12,
  QV_NON_POSITIVE_WARPING = 13,
  QV_NOT_SUBCRITICAL = 14,
  QV_INCONCLUSIVE = 15,
  QV_UNSUPPORTED_ALPHA = 16,
  QV_NON_POSITIVE_QUOTIENT = 17,
  QV_MASS_EXCEEDED = 18,
  QV_UNSUPPORTED_EXPONENT = 19,
  QV_SINGULAR_POTENTIAL = 20,
  QV_NON_POSITIVE_G = 21,
  QV_UNBOUNDED_RATIO = 22,
  QV_NO_INTERIOR_DOF = 23,
  QV_NOT_COERCIVE = 24,
  QV_NON_CONVERGENCE = 25,
  QV_BAD_NONLINEARITY = 26,
  QV_DELTA_VIOLATED = 27,
  QV_LADDER_STALL = 28,
  QV_DIMENSION_TOO_LOW = 29,
  QV_MONOTONICITY_VIOLATED = 30,
  QV_CONFIG = 31,
  QV_IO = 32,
} qv_status;

typedef enum {
  QV_SUBCRITICAL = 0,
  QV_CRITICAL = 1,
  QV_INCONCLUSIVE_CLASS = 2,
} qv_criticality;

/**
 * P1 finite element mesh on a ball or annulus.
 */
typedef struct qv_mesh qv_mesh;

/**
 * Radial model manifold.
 */
typedef struct qv_model qv_model;

/**
 * Radial coefficient profile.
 */
typedef struct qv_potential qv_potential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qv_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length without
 * the terminator, or 0 when there is none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t qv_last_error_message(char *buf, size_t len);

/**
 * Static name of a status code.
 */
const char *qv_status_name(qv_status status);

/**
 * Euclidean space `R^m` with exponent `p`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
qv_status qv_model_flat(size_t m, double p, qv_model **out);

/**
 * Hyperbolic space of curvature `-kappa^2`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
qv_status qv_model_hyperbolic(size_t m, double p, double kappa, qv_model **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void qv_model_free(qv_model *model);

/**
 * Hardy weight `chi(r)`.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_hardy_weight(const qv_model *model, double r, double *out);

/**
 * Green kernel `G(r)`; fails with `QV_NOT_SUBCRITICAL` on parabolic models.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_green_value(const qv_model *model, double r, double *out);

/**
 * # Safety
 * `out` must be valid.
 */
qv_status qv_potential_constant(double c, qv_potential **out);

/**
 * `scale * chi` for the model's Hardy weight.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_potential_hardy(const qv_model *model, double scale, qv_potential **out);

/**
 * Smooth bump of the given height supported in `|r - center| < width`.
 *
 * # Safety
 * `out` must be valid.
 */
qv_status qv_potential_bump(double center, double width, double height, qv_potential **out);

/**
 * `a + b`; the inputs stay owned by the caller.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_potential_sum(const qv_potential *a, const qv_potential *b, qv_potential **out);

/**
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_potential_eval(const qv_potential *v, double r, double *out);

/**
 * # Safety
 * `v` must be null or a handle from this library not yet freed.
 */
void qv_potential_free(qv_potential *v);

/**
 * Ball `B_radius` with `n` uniform elements.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_mesh_ball(const qv_model *model, double radius, size_t n, qv_mesh **out);

/**
 * Annulus `inner < r < outer` with `n` uniform elements.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_mesh_annulus(const qv_model *model,
                          double inner,
                          double outer,
                          size_t n,
                          qv_mesh **out);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or valid.
 */
size_t qv_mesh_node_count(const qv_mesh *mesh);

/**
 * Copies the node radii into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles; `written` must be valid.
 */
qv_status qv_mesh_nodes(const qv_mesh *mesh, double *buf, size_t len, size_t *written);

/**
 * # Safety
 * `mesh` must be null or a handle from this library not yet freed.
 */
void qv_mesh_free(qv_mesh *mesh);

/**
 * First eigenvalue of `-Delta_p - V` with Dirichlet conditions.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_fundamental_tone(const qv_mesh *mesh, const qv_potential *v, double *lambda);

/**
 * Capacity of `B_inner` with `g` constant along the ladder
 * `B_{inner factor^j}`, `j = 1..=rungs`; stores the last rung's value.
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_capacity(const qv_model *model,
                      const qv_potential *v,
                      double g,
                      double inner,
                      double factor,
                      size_t rungs,
                      size_t elements_per_factor,
                      double *out);

/**
 * Classifies `Q_V` from the same capacity ladder as [`qv_capacity`].
 *
 * # Safety
 * Pointers must be valid.
 */
qv_status qv_classify(const qv_model *model,
                      const qv_potential *v,
                      double inner,
                      double factor,
                      size_t rungs,
                      size_t elements_per_factor,
                      qv_criticality *out);

/**
 * Monotone iteration for `Delta_p u + a u^{p-1} - b u^sigma = 0`, `u = eps`
 * on the outer boundary, window `[lo, hi]`. Writes nodal values of `u`.
 *
 * # Safety
 * Pointers must be valid; `buf` must hold `len` doubles.
 */
qv_status qv_solve_power(const qv_mesh *mesh,
                         const qv_potential *a,
                         const qv_potential *b,
                         double sigma,
                         double eps,
                         double lo,
                         double hi,
                         double *buf,
                         size_t len,
                         size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QVLAB_H */
