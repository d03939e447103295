#ifndef DATATRADE_FFI_H
#define DATATRADE_FFI_H

/* Generated by cbindgen from datatrade-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Mirrors the CLI exit codes: 2 for invalid
 * input, 3 for an oracle disagreement.
 */
typedef enum DtStatus {
  DT_STATUS_OK = 0,
  DT_STATUS_NULL_POINTER = 1,
  DT_STATUS_INVALID_ARGUMENT = 2,
  DT_STATUS_DISAGREEMENT = 3,
} DtStatus;

/**
 * Opaque validated economy handle.
 */
typedef struct DtPrimitives DtPrimitives;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dt_last_error(void);

/**
 * Parses and validates a primitives JSON object
 * (`{"L":..,"H":..,"V":..,"v_L":..,"v_H":..,"mu0":..}`) into a handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid pointer.
 * The returned handle must be freed with [`dt_primitives_free`].
 */
enum DtStatus dt_primitives_parse(const char *json, struct DtPrimitives **out);

/**
 * Releases a handle from [`dt_primitives_parse`]. Null is a no-op.
 *
 * # Safety
 * `p` must be null or a pointer previously returned by
 * [`dt_primitives_parse`] that has not been freed yet.
 */
void dt_primitives_free(struct DtPrimitives *p);

/**
 * Releases a string written by any `dt_*` call. Null is a no-op.
 *
 * # Safety
 * `s` must be null or a pointer written by this library that has not been
 * freed yet.
 */
void dt_string_free(char *s);

/**
 * Writes the regime classification as JSON.
 *
 * # Safety
 * `p` must be a live handle; `out_json` must be a valid pointer.
 */
enum DtStatus dt_classify(const struct DtPrimitives *p, char **out_json);

/**
 * Solves the closed form and writes the solution bundle as JSON. On the
 * `mu0 = v_L/v_H` knife edge (with `beta = 1`) the JSON carries both branch
 * solutions instead.
 *
 * `selection` is `upper`, `lower`, `mid`, or `value=<v>`; `service_space`
 * is `general` or `binary`; `beta` in (0, 1].
 *
 * # Safety
 * `p` must be a live handle; string arguments must be NUL-terminated;
 * `out_json` must be a valid pointer.
 */
enum DtStatus dt_solve(const struct DtPrimitives *p,
                       double beta,
                       const char *selection,
                       const char *service_space,
                       char **out_json);

/**
 * Runs the grid oracle against the closed form and writes the verification
 * report as JSON. Returns `Disagreement` (report still written) when the
 * payoffs differ beyond `tol`.
 *
 * # Safety
 * `p` must be a live handle; `out_json` must be a valid pointer.
 */
enum DtStatus dt_verify(const struct DtPrimitives *p,
                        double beta,
                        double tol,
                        double grid_step,
                        uint32_t refine_rounds,
                        char **out_json);

/**
 * Evaluates the eight-constraint ledger for a mechanism JSON object and
 * writes the report as JSON.
 *
 * # Safety
 * `p` must be a live handle; `mechanism_json` must be NUL-terminated;
 * `out_json` must be a valid pointer.
 */
enum DtStatus dt_check_constraints(const struct DtPrimitives *p,
                                   const char *mechanism_json,
                                   double beta,
                                   double eps,
                                   char **out_json);

/**
 * Simulates `n >= 1` consumers against a mechanism JSON object and writes
 * the empirical report as JSON. Deterministic given `seed`.
 *
 * # Safety
 * `p` must be a live handle; `mechanism_json` must be NUL-terminated;
 * `out_json` must be a valid pointer.
 */
enum DtStatus dt_simulate(const struct DtPrimitives *p,
                          const char *mechanism_json,
                          uint64_t n,
                          uint64_t seed,
                          char **out_json);

/**
 * Writes the data-trade ban comparison as JSON.
 *
 * # Safety
 * `p` must be a live handle; `out_json` must be a valid pointer.
 */
enum DtStatus dt_compare_ban(const struct DtPrimitives *p, char **out_json);

/**
 * Writes the bargaining-power sweep over `betas` as a JSON array.
 *
 * # Safety
 * `p` must be a live handle; `betas` must point to `len` doubles when
 * `len > 0`; `out_json` must be a valid pointer.
 */
enum DtStatus dt_beta_sweep(const struct DtPrimitives *p,
                            const double *betas,
                            size_t len,
                            char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DATATRADE_FFI_H */
