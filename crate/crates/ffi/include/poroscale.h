#ifndef POROSCALE_H
#define POROSCALE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_INPUT = 2,
  PS_STATUS_CONFIG = 3,
  PS_STATUS_IO = 4,
  PS_STATUS_FORMAT = 5,
  PS_STATUS_SOLVER = 6,
  PS_STATUS_REJECTED = 7,
  PS_STATUS_EXTRAPOLATION = 8,
  PS_STATUS_PANIC = 9,
} PsStatus;

/**
 * A trained surrogate bundle.
 */
typedef struct PsBundle PsBundle;

/**
 * A consolidation column and its current state.
 */
typedef struct PsColumn PsColumn;

/**
 * Cell-averaged tensors at the reference solid modulus.
 */
typedef struct PsCell {
  double phi;
  double nu;
  double m11;
  double m12;
  double m44;
  double q11;
  double k11;
} PsCell;

typedef struct PsEffective {
  double c11;
  double c12;
  double c44;
  double alpha;
  double biot_modulus;
  double k11;
} PsEffective;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *ps_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Solves the cell problems at `(phi, nu)` with mesh spacing `resolution`.
 * All cell quantities are dimensionless.
 *
 * # Safety
 * `out` must point to writable memory for one `PsCell`.
 */
enum PsStatus ps_cell_solve(double phi, double nu, double resolution, struct PsCell *out);

/**
 * Effective Biot coefficients for a cell at dimensionless solid moduli
 * `(solid_e, solid_nu)`.
 *
 * # Safety
 * `cell` must point to a valid `PsCell` and `out` to writable memory.
 */
enum PsStatus ps_effective_from_cell(const struct PsCell *cell,
                                     double solid_e,
                                     double solid_nu,
                                     struct PsEffective *out);

/**
 * Incremental and closed-form nominal stress of a neo-Hookean bar stretched
 * to `stretch` in `increments` steps. Stresses are in the units of `e`.
 *
 * # Safety
 * `incremental` and `oracle` must point to writable doubles.
 */
enum PsStatus ps_hyper_uniaxial(double e,
                                double nu,
                                double stretch,
                                uintptr_t increments,
                                double *incremental,
                                double *oracle);

/**
 * Loads a bundle written by `poroscale train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum PsStatus ps_bundle_load(const char *path, struct PsBundle **out);

/**
 * Surrogate prediction of the cell tensors at `(phi, nu)`.
 *
 * # Safety
 * `bundle` must come from `ps_bundle_load`; `out` must be writable.
 */
enum PsStatus ps_bundle_predict(const struct PsBundle *bundle,
                                double phi,
                                double nu,
                                struct PsCell *out);

/**
 * # Safety
 * `bundle` must come from `ps_bundle_load` or be null.
 */
void ps_bundle_free(struct PsBundle *bundle);

/**
 * Builds a consolidation column from a TOML overlay on the consolidation
 * defaults (`""` keeps them). With a null `bundle` the column uses direct
 * cell solves. The bundle is copied, so it may be freed afterwards.
 *
 * # Safety
 * `config_toml` must be NUL-terminated, `bundle` null or a live bundle, and
 * `out` writable.
 */
enum PsStatus ps_column_new(const char *config_toml,
                            const struct PsBundle *bundle,
                            bool linear,
                            struct PsColumn **out);

/**
 * Advances the column to `t_seconds`. The load ramp is resolved with the
 * configured number of increments.
 *
 * # Safety
 * `col` must come from `ps_column_new`.
 */
enum PsStatus ps_column_advance(struct PsColumn *col, double t_seconds);

/**
 * Current time (s), settlement of the top face (m) and cumulative drained
 * volume per unit area (m). Any output pointer may be null.
 *
 * # Safety
 * `col` must come from `ps_column_new`; non-null outputs must be writable.
 */
enum PsStatus ps_column_status(const struct PsColumn *col,
                               double *t_seconds,
                               double *settlement,
                               double *drained);

/**
 * Pore pressure (Pa) at height `x` (m) above the base.
 *
 * # Safety
 * `col` must come from `ps_column_new`; `out` must be writable.
 */
enum PsStatus ps_column_pressure_at(const struct PsColumn *col, double x, double *out);

/**
 * # Safety
 * `col` must come from `ps_column_new` or be null.
 */
void ps_column_free(struct PsColumn *col);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POROSCALE_H */
