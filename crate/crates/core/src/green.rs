//! Zero-mean Green function of the torus Laplacian.
//!
//! The column at source `x` solves `ΔG(x,·) = δ_x - 1`, with `δ_x` the
//! discrete delta of unit mass (value `res^n` at `x`), and `∫G(x,·) = 0`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::functionals::{sharp_constants, SharpConstants};
use crate::subcritical::SubcriticalSolution;
use crate::torus::{self, ScalarField, TorusGrid};

type Slot = Arc<OnceLock<Arc<ScalarField>>>;

/// Grid, sharp constants and a per-source column cache. Concurrent requests
/// for one source share a single computation.
pub struct GreenContext {
    grid: TorusGrid,
    consts: SharpConstants,
    columns: Mutex<HashMap<usize, Slot>>,
}

impl GreenContext {
    pub fn new(grid: &TorusGrid) -> Result<Self> {
        Ok(Self {
            grid: grid.clone(),
            consts: sharp_constants(grid.dim())?,
            columns: Mutex::new(HashMap::new()),
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn consts(&self) -> &SharpConstants {
        &self.consts
    }

    /// `G(x, ·)` for the grid point with flat index `source`.
    pub fn column(&self, source: usize) -> Arc<ScalarField> {
        let slot = {
            let mut map = self.columns.lock().expect("green cache poisoned");
            map.entry(source).or_default().clone()
        };
        slot.get_or_init(|| Arc::new(compute_column(&self.grid, source)))
            .clone()
    }

    pub fn cached_columns(&self) -> usize {
        self.columns.lock().expect("green cache poisoned").len()
    }
}

fn compute_column(grid: &TorusGrid, source: usize) -> ScalarField {
    let mass = grid.len() as f64;
    let mut rhs = vec![-1.0; grid.len()];
    rhs[source] += mass;
    torus::invert_mean_free(&ScalarField::from_raw(grid, rhs))
}

/// `max |ΔG(x,·) - δ_x + 1| / res^n`, the defining equation of one column.
pub fn column_equation_residual(ctx: &GreenContext, source: usize) -> f64 {
    let col = ctx.column(source);
    let lap = torus::laplacian(&col);
    let mass = ctx.grid().len() as f64;
    lap.values()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let delta = if i == source { mass } else { 0.0 };
            (l - delta + 1.0).abs()
        })
        .fold(0.0, f64::max)
        / mass
}

/// The discrete delta of unit mass at `source`.
pub fn discrete_delta(grid: &TorusGrid, source: usize) -> ScalarField {
    let mut v = vec![0.0; grid.len()];
    v[source] = grid.len() as f64;
    ScalarField::from_raw(grid, v)
}

pub fn green_column(ctx: &GreenContext, source: usize) -> Arc<ScalarField> {
    ctx.column(source)
}

/// Default probe points for [`representation_check`]: the maximum point of
/// `u` and a fixed spread of grid points.
pub fn default_samples(sol: &SubcriticalSolution) -> Vec<usize> {
    let len = sol.grid().len();
    let mut s = vec![sol.x_max_flat()];
    for k in 1..8 {
        let i = (k * len) / 8 + k * 7 % len;
        if !s.contains(&(i % len)) {
            s.push(i % len);
        }
    }
    s
}

/// `max_y |u(y) - ū - λ ∫ G(y,x) f u^{q-1} dv(x)| / ‖u‖_∞` over `samples`.
pub fn representation_check(
    ctx: &GreenContext,
    sol: &SubcriticalSolution,
    f: &ScalarField,
    samples: &[usize],
) -> Result<f64> {
    sol.u.check_same_grid(f)?;
    if sol.u.grid() != ctx.grid() {
        return Err(Error::GridMismatch);
    }
    let q = sol.q;
    let h = ctx.grid().cell_volume();
    let source: Vec<f64> = sol
        .u
        .values()
        .iter()
        .zip(f.values())
        .map(|(&u, &fv)| fv * u.abs().powf(q - 1.0))
        .collect();
    let mean = torus::integrate(&sol.u);
    let sup = sol.u.sup_norm();
    if sup == 0.0 {
        return Err(Error::ZeroDenominator("representation check"));
    }
    let mut worst: f64 = 0.0;
    for &y in samples {
        let col = ctx.column(y);
        let conv: f64 = col.values().iter().zip(&source).map(|(g, s)| g * s).sum::<f64>() * h;
        worst = worst.max((sol.u.get(y) - mean - sol.lam * conv).abs());
    }
    Ok(worst / sup)
}

/// Zero-mean `φ` with `Δφ = λ* (1 - f/f̄)`.
pub fn phi_field(ctx: &GreenContext, f: &ScalarField, lam_star: f64) -> Result<ScalarField> {
    if f.grid() != ctx.grid() {
        return Err(Error::GridMismatch);
    }
    let f_bar = torus::integrate(f);
    let threshold = 1e-12 * f.sup_norm().max(f64::MIN_POSITIVE);
    if f_bar.abs() <= threshold {
        return Err(Error::MeanTooSmall {
            mean: f_bar,
            threshold,
        });
    }
    let rhs = f.map(|v| lam_star * (1.0 - v / f_bar))?;
    Ok(torus::invert_mean_free(&rhs))
}

/// `Φ(x,y) = (n-2) ω_{n-1} d(x,y)^{n-2} G(x,y)`.
pub fn capital_phi(ctx: &GreenContext, x: usize, y: usize) -> Result<f64> {
    if x == y {
        return Err(Error::SingularKernel);
    }
    let grid = ctx.grid();
    let d = torus::torus_distance(&grid.point(x), &grid.point(y));
    let nf = grid.dim() as f64;
    Ok((nf - 2.0) * ctx.consts.omega_n_minus_1 * d.powf(nf - 2.0) * ctx.column(x).get(y))
}
