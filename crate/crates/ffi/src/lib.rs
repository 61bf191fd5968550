//! C ABI over `nullcurv`.
//!
//! Every fallible call returns an [`NcStatus`]. On failure the thread-local
//! message is readable through [`nc_last_error_message`]. Handles are opaque
//! and owned by the caller once returned; release them with the matching
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nullcurv::functionals;
use nullcurv::snapshot;
use nullcurv::subcritical::{self, Init, SolverConfig, SubcriticalSolution};
use nullcurv::torus::{self, ScalarField, TorusGrid};
use nullcurv::verify;
use nullcurv::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    LengthMismatch = 4,
    NotAdmissible = 5,
    ExponentOutOfRange = 6,
    /// The returned solution is the best iterate, not a converged one.
    NonConvergence = 7,
    Numerical = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for NcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDimension { .. } | Error::InvalidResolution { .. } | Error::GridTooLarge { .. } => {
                NcStatus::InvalidGrid
            }
            Error::LengthMismatch { .. } | Error::GridMismatch => NcStatus::LengthMismatch,
            Error::NotAdmissible { .. } | Error::NonPositiveMax { .. } => NcStatus::NotAdmissible,
            Error::ExponentOutOfRange { .. } => NcStatus::ExponentOutOfRange,
            Error::NonConvergence { .. } | Error::ContinuationFailed { .. } => NcStatus::NonConvergence,
            Error::Io(_) | Error::Snapshot(_) => NcStatus::Io,
            Error::NonFinite { .. }
            | Error::NonSolvable { .. }
            | Error::OutsideConstraintCone { .. }
            | Error::NonPositiveField { .. }
            | Error::ZeroDenominator(_)
            | Error::UndefinedScale { .. }
            | Error::UnderResolved { .. }
            | Error::MeanTooSmall { .. }
            | Error::JungUnderflow { .. }
            | Error::SingularKernel => NcStatus::Numerical,
            _ => NcStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(e: &Error) -> NcStatus {
    set_error(e.to_string());
    NcStatus::from(e)
}

fn guard(body: impl FnOnce() -> NcStatus) -> NcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => {
            if s == NcStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            NcStatus::Panic
        }
    }
}

macro_rules! deref {
    ($p:expr, $what:literal) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => {
                set_error(concat!($what, " is null"));
                return NcStatus::NullPointer;
            }
        }
    };
}

macro_rules! out {
    ($p:expr, $v:expr) => {{
        if $p.is_null() {
            set_error("output pointer is null");
            return NcStatus::NullPointer;
        }
        unsafe { *$p = $v };
    }};
}

/// Uniform grid on the flat unit torus.
pub struct NcGrid(TorusGrid);

/// Real sample vector on a grid.
pub struct NcField(ScalarField);

/// A minimizer of the subcritical problem.
pub struct NcSolution(SubcriticalSolution);

/// Solver settings. `step <= 0` selects the grid default.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NcSolverConfig {
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub init_width_cells: f64,
    pub backtrack: f64,
    pub growth: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NcSolutionSummary {
    pub q: f64,
    pub lam: f64,
    pub el_residual: f64,
    pub energy: f64,
    pub iters: usize,
    pub u_max: f64,
    pub x_max_flat: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NcSharpConstants {
    pub n: usize,
    pub omega_n: f64,
    pub omega_n_minus_1: f64,
    pub k_n_2_sq: f64,
    pub bubble_mass: f64,
    pub two_star: f64,
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_grid_new(n: usize, res: usize, out: *mut *mut NcGrid) -> NcStatus {
    guard(|| match TorusGrid::new(n, res) {
        Ok(g) => {
            out!(out, Box::into_raw(Box::new(NcGrid(g))));
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// # Safety
/// `grid` must be null or a handle from [`nc_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_grid_free(grid: *mut NcGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_grid_len(grid: *const NcGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Copies `len` row-major samples into a new field on `grid`.
///
/// # Safety
/// `values` must point to `len` readable doubles; `grid` and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nc_field_new(
    grid: *const NcGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut NcField,
) -> NcStatus {
    guard(|| {
        let g = deref!(grid, "grid");
        if values.is_null() {
            set_error("values is null");
            return NcStatus::NullPointer;
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        match ScalarField::new(&g.0, v) {
            Ok(f) => {
                out!(out, Box::into_raw(Box::new(NcField(f))));
                NcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_field_free(field: *mut NcField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copies the samples of `field` into `buf`, which must hold exactly the
/// grid length.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nc_field_values(field: *const NcField, buf: *mut f64, len: usize) -> NcStatus {
    guard(|| {
        let f = deref!(field, "field");
        if buf.is_null() {
            set_error("buffer is null");
            return NcStatus::NullPointer;
        }
        if len != f.0.len() {
            return fail(&Error::LengthMismatch {
                expected: f.0.len(),
                got: len,
            });
        }
        ptr::copy_nonoverlapping(f.0.values().as_ptr(), buf, len);
        NcStatus::Ok
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_laplacian(field: *const NcField, out: *mut *mut NcField) -> NcStatus {
    guard(|| {
        let f = deref!(field, "field");
        out!(out, Box::into_raw(Box::new(NcField(torus::laplacian(&f.0)))));
        NcStatus::Ok
    })
}

/// `∫ u dv` over the unit torus.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_integrate(field: *const NcField, out: *mut f64) -> NcStatus {
    guard(|| {
        let f = deref!(field, "field");
        out!(out, torus::integrate(&f.0));
        NcStatus::Ok
    })
}

/// Mean-free solution of `Δu = rhs`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_solve_poisson(rhs: *const NcField, out: *mut *mut NcField) -> NcStatus {
    guard(|| {
        let f = deref!(rhs, "rhs");
        match torus::solve_poisson(&f.0) {
            Ok(u) => {
                out!(out, Box::into_raw(Box::new(NcField(u))));
                NcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

#[no_mangle]
pub extern "C" fn nc_solver_config_default() -> NcSolverConfig {
    let d = SolverConfig::default();
    let width = match d.init {
        Init::Bump { width_cells } => width_cells,
        Init::WarmStart(_) => 4.0,
    };
    NcSolverConfig {
        step: d.step.unwrap_or(0.0),
        tol: d.tol,
        max_iters: d.max_iters,
        init_width_cells: width,
        backtrack: d.backtrack,
        growth: d.growth,
    }
}

fn solver_config(c: &NcSolverConfig) -> SolverConfig {
    SolverConfig {
        step: (c.step > 0.0).then_some(c.step),
        tol: c.tol,
        max_iters: c.max_iters,
        init: Init::Bump {
            width_cells: c.init_width_cells,
        },
        backtrack: c.backtrack,
        growth: c.growth,
    }
}

/// Minimizes the subcritical Rayleigh quotient for curvature `f` at
/// exponent `q`. A null `cfg` uses the defaults. On
/// [`NcStatus::NonConvergence`] `out` receives the best iterate.
///
/// # Safety
/// `f` and `out` must be valid; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn nc_minimize(
    f: *const NcField,
    q: f64,
    cfg: *const NcSolverConfig,
    out: *mut *mut NcSolution,
) -> NcStatus {
    guard(|| {
        let f = deref!(f, "curvature field");
        if out.is_null() {
            set_error("output pointer is null");
            return NcStatus::NullPointer;
        }
        let cfg = cfg.as_ref().map_or_else(SolverConfig::default, solver_config);
        match subcritical::minimize(&f.0, q, &cfg) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(NcSolution(sol)));
                NcStatus::Ok
            }
            Err(e) => {
                let status = fail(&e);
                if let Error::NonConvergence { best, .. } = e {
                    *out = Box::into_raw(Box::new(NcSolution(*best)));
                }
                status
            }
        }
    })
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_free(sol: *mut NcSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_summary(sol: *const NcSolution, out: *mut NcSolutionSummary) -> NcStatus {
    guard(|| {
        let s = &deref!(sol, "solution").0;
        out!(
            out,
            NcSolutionSummary {
                q: s.q,
                lam: s.lam,
                el_residual: s.el_residual,
                energy: s.energy,
                iters: s.iters,
                u_max: s.u_max,
                x_max_flat: s.x_max_flat(),
            }
        );
        NcStatus::Ok
    })
}

/// A copy of the minimizer as a new field handle.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_solution_field(sol: *const NcSolution, out: *mut *mut NcField) -> NcStatus {
    guard(|| {
        let s = deref!(sol, "solution");
        out!(out, Box::into_raw(Box::new(NcField(s.0.u.clone()))));
        NcStatus::Ok
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_sharp_constants(n: usize, out: *mut NcSharpConstants) -> NcStatus {
    guard(|| match functionals::sharp_constants(n) {
        Ok(c) => {
            out!(
                out,
                NcSharpConstants {
                    n: c.n,
                    omega_n: c.omega_n,
                    omega_n_minus_1: c.omega_n_minus_1,
                    k_n_2_sq: c.k_n_2_sq,
                    bubble_mass: c.bubble_mass,
                    two_star: c.two_star,
                }
            );
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// `K(n,2)^{-2} (max f)^{-2/2*}`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_lambda_upper_bound(f: *const NcField, out: *mut f64) -> NcStatus {
    guard(|| {
        let f = deref!(f, "curvature field");
        let result = functionals::sharp_constants(f.0.grid().dim())
            .and_then(|c| functionals::lambda_upper_bound(&f.0, &c));
        match result {
            Ok(v) => {
                out!(out, v);
                NcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nc_jung_limit(s: f64, x: f64, out: *mut f64) -> NcStatus {
    guard(|| match verify::jung_limit(s, x) {
        Ok(v) => {
            out!(out, v);
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, NcStatus> {
    if path.is_null() {
        set_error("path is null");
        return Err(NcStatus::NullPointer);
    }
    CStr::from_ptr(path).to_str().map_err(|_| {
        set_error("path is not valid UTF-8");
        NcStatus::InvalidArgument
    })
}

/// # Safety
/// `field` must be valid; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nc_snapshot_write(field: *const NcField, path: *const c_char) -> NcStatus {
    guard(|| {
        let f = deref!(field, "field");
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match snapshot::write_file(&f.0, p) {
            Ok(()) => NcStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nc_snapshot_read(path: *const c_char, out: *mut *mut NcField) -> NcStatus {
    guard(|| {
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match snapshot::read_file(p) {
            Ok(f) => {
                out!(out, Box::into_raw(Box::new(NcField(f))));
                NcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
