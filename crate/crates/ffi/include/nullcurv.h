#ifndef NULLCURV_H
#define NULLCURV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum NcStatus {
  NC_STATUS_OK = 0,
  NC_STATUS_NULL_POINTER = 1,
  NC_STATUS_INVALID_ARGUMENT = 2,
  NC_STATUS_INVALID_GRID = 3,
  NC_STATUS_LENGTH_MISMATCH = 4,
  NC_STATUS_NOT_ADMISSIBLE = 5,
  NC_STATUS_EXPONENT_OUT_OF_RANGE = 6,
  // The returned solution is the best iterate, not a converged one.
  NC_STATUS_NON_CONVERGENCE = 7,
  NC_STATUS_NUMERICAL = 8,
  NC_STATUS_IO = 9,
  NC_STATUS_PANIC = 10,
} NcStatus;

// Real sample vector on a grid.
typedef struct NcField NcField;

// Uniform grid on the flat unit torus.
typedef struct NcGrid NcGrid;

// A minimizer of the subcritical problem.
typedef struct NcSolution NcSolution;

// Solver settings. `step <= 0` selects the grid default.
typedef struct NcSolverConfig {
  double step;
  double tol;
  size_t max_iters;
  double init_width_cells;
  double backtrack;
  double growth;
} NcSolverConfig;

typedef struct NcSolutionSummary {
  double q;
  double lam;
  double el_residual;
  double energy;
  size_t iters;
  double u_max;
  size_t x_max_flat;
} NcSolutionSummary;

typedef struct NcSharpConstants {
  size_t n;
  double omega_n;
  double omega_n_minus_1;
  double k_n_2_sq;
  double bubble_mass;
  double two_star;
} NcSharpConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` as a
// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
// message length in bytes, excluding the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t nc_last_error_message(char *buf, size_t len);

// # Safety
// `out` must be a valid pointer.
enum NcStatus nc_grid_new(size_t n, size_t res, struct NcGrid **out);

// # Safety
// `grid` must be null or a handle from [`nc_grid_new`] not yet freed.
void nc_grid_free(struct NcGrid *grid);

// Number of grid points, or 0 for a null handle.
//
// # Safety
// `grid` must be null or a live handle.
size_t nc_grid_len(const struct NcGrid *grid);

// Copies `len` row-major samples into a new field on `grid`.
//
// # Safety
// `values` must point to `len` readable doubles; `grid` and `out` valid.
enum NcStatus nc_field_new(const struct NcGrid *grid,
                           const double *values,
                           size_t len,
                           struct NcField **out);

// # Safety
// `field` must be null or a live handle.
void nc_field_free(struct NcField *field);

// Copies the samples of `field` into `buf`, which must hold exactly the
// grid length.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum NcStatus nc_field_values(const struct NcField *field, double *buf, size_t len);

// # Safety
// Pointers must be valid.
enum NcStatus nc_laplacian(const struct NcField *field, struct NcField **out);

// `∫ u dv` over the unit torus.
//
// # Safety
// Pointers must be valid.
enum NcStatus nc_integrate(const struct NcField *field, double *out);

// Mean-free solution of `Δu = rhs`.
//
// # Safety
// Pointers must be valid.
enum NcStatus nc_solve_poisson(const struct NcField *rhs, struct NcField **out);

struct NcSolverConfig nc_solver_config_default(void);

// Minimizes the subcritical Rayleigh quotient for curvature `f` at
// exponent `q`. A null `cfg` uses the defaults. On
// [`NcStatus::NonConvergence`] `out` receives the best iterate.
//
// # Safety
// `f` and `out` must be valid; `cfg` may be null.
enum NcStatus nc_minimize(const struct NcField *f,
                          double q,
                          const struct NcSolverConfig *cfg,
                          struct NcSolution **out);

// # Safety
// `sol` must be null or a live handle.
void nc_solution_free(struct NcSolution *sol);

// # Safety
// Pointers must be valid.
enum NcStatus nc_solution_summary(const struct NcSolution *sol, struct NcSolutionSummary *out);

// A copy of the minimizer as a new field handle.
//
// # Safety
// Pointers must be valid.
enum NcStatus nc_solution_field(const struct NcSolution *sol, struct NcField **out);

// # Safety
// `out` must be valid.
enum NcStatus nc_sharp_constants(size_t n, struct NcSharpConstants *out);

// `K(n,2)^{-2} (max f)^{-2/2*}`.
//
// # Safety
// Pointers must be valid.
enum NcStatus nc_lambda_upper_bound(const struct NcField *f, double *out);

// # Safety
// `out` must be valid.
enum NcStatus nc_jung_limit(double s, double x, double *out);

// # Safety
// `field` must be valid; `path` a NUL-terminated string.
enum NcStatus nc_snapshot_write(const struct NcField *field, const char *path);

// # Safety
// `path` must be a NUL-terminated string; `out` valid.
enum NcStatus nc_snapshot_read(const char *path, struct NcField **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NULLCURV_H */
