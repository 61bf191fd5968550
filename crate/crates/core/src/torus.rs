//! The discrete flat torus `[0,1)^n` with unit volume and its spectral calculus.
//!
//! Sign convention: [`laplacian`] is the geometer's Laplacian `Δ = -div ∇`, a
//! positive operator. The Fourier mode `exp(2πi k·x)` is an eigenfunction with
//! eigenvalue `+(2π|k|)²`, so `Δ cos(2πx₁) = 4π² cos(2πx₁)`.
//!
//! Fields are stored row-major with axis 0 varying slowest. All operators are
//! exact on trigonometric polynomials below the Nyquist frequency.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default upper bound on `res^n`.
pub const DEFAULT_POINT_CAP: usize = 1 << 24;

/// Relative mean tolerance used by [`solve_poisson`].
pub const DEFAULT_MEAN_TOL: f64 = 1e-10;

struct GridInner {
    n: usize,
    res: usize,
    len: usize,
    cell_volume: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    symbol: Vec<f64>,
}

/// Uniform periodic grid on the unit torus. Cheap to clone.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.inner.n)
            .field("res", &self.inner.res)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n && self.inner.res == other.inner.res
    }
}

impl Eq for TorusGrid {}

/// Signed wavenumber of FFT index `i` on an axis of length `res`.
/// The Nyquist index maps to `-res/2`.
pub fn wavenumber(i: usize, res: usize) -> i64 {
    if i < res / 2 {
        i as i64
    } else {
        i as i64 - res as i64
    }
}

impl TorusGrid {
    pub fn new(n: usize, res: usize) -> Result<Self> {
        Self::with_cap(n, res, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(n: usize, res: usize, cap: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDimension { n, min: 1 });
        }
        if res < 4 || !res.is_multiple_of(2) {
            return Err(Error::InvalidResolution { res });
        }
        let points = (res as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if points > cap as u128 {
            return Err(Error::GridTooLarge { points, cap });
        }
        let len = points as usize;

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(res);
        let inverse = planner.plan_fft_inverse(res);

        let axis_sq: Vec<f64> = (0..res)
            .map(|i| {
                let k = wavenumber(i, res) as f64;
                4.0 * PI * PI * k * k
            })
            .collect();
        let mut symbol = vec![0.0; len];
        for (flat, s) in symbol.iter_mut().enumerate() {
            let mut rem = flat;
            let mut acc = 0.0;
            for _ in 0..n {
                acc += axis_sq[rem % res];
                rem /= res;
            }
            *s = acc;
        }

        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                res,
                len,
                cell_volume: (res as f64).powi(-(n as i32)),
                forward,
                inverse,
                symbol,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.n
    }

    pub fn res(&self) -> usize {
        self.inner.res
    }

    /// Number of grid points, `res^n`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len == 0
    }

    /// Axis length. Always 1.
    pub fn period(&self) -> f64 {
        1.0
    }

    pub fn cell_volume(&self) -> f64 {
        self.inner.cell_volume
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.inner.res as f64
    }

    /// Laplacian eigenvalue `(2π|k|)²` of every stored mode, in flat order.
    pub fn symbol(&self) -> &[f64] {
        &self.inner.symbol
    }

    /// Largest Laplacian eigenvalue on the grid (all axes at Nyquist).
    pub fn max_eigenvalue(&self) -> f64 {
        let k = (self.inner.res / 2) as f64;
        4.0 * PI * PI * k * k * self.inner.n as f64
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let res = self.inner.res;
        let mut idx = vec![0; self.inner.n];
        let mut rem = flat;
        for slot in idx.iter_mut().rev() {
            *slot = rem % res;
            rem /= res;
        }
        idx
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.inner.n {
            return Err(Error::InvalidArgument(format!(
                "multi-index has {} components, grid has dimension {}",
                index.len(),
                self.inner.n
            )));
        }
        let res = self.inner.res;
        let mut flat = 0;
        for &i in index {
            if i >= res {
                return Err(Error::InvalidArgument(format!(
                    "index component {i} outside [0, {res})"
                )));
            }
            flat = flat * res + i;
        }
        Ok(flat)
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(flat)
            .into_iter()
            .map(|i| i as f64 * h)
            .collect()
    }

    pub fn point(&self, flat: usize) -> GridPoint {
        let index = self.multi_index(flat);
        let h = self.spacing();
        let coords = index.iter().map(|&i| i as f64 * h).collect();
        GridPoint { index, coords }
    }

    /// Unnormalized forward DFT of real data.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.inner.forward);
        data
    }

    /// Inverse DFT including the `1/res^n` normalization; returns the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.inner.inverse);
        let scale = 1.0 / self.inner.len as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let res = self.inner.res;
        let len = self.inner.len;
        debug_assert_eq!(data.len(), len);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::new(0.0, 0.0); len];
        let mut stride = 1;
        for _axis in 0..self.inner.n {
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
            } else {
                let block = res * stride;
                let mut w = 0;
                for base in (0..len).step_by(block) {
                    for inner in 0..stride {
                        for j in 0..res {
                            lines[w] = data[base + inner + j * stride];
                            w += 1;
                        }
                    }
                }
                fft.process_with_scratch(&mut lines, &mut scratch);
                let mut r = 0;
                for base in (0..len).step_by(block) {
                    for inner in 0..stride {
                        for j in 0..res {
                            data[base + inner + j * stride] = lines[r];
                            r += 1;
                        }
                    }
                }
            }
            stride *= res;
        }
    }
}

/// A grid location: multi-index and coordinates `index / res`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub index: Vec<usize>,
    pub coords: Vec<f64>,
}

impl GridPoint {
    pub fn flat(&self, grid: &TorusGrid) -> Result<usize> {
        grid.flat_index(&self.index)
    }
}

/// Real values on a [`TorusGrid`], all finite.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(coords)` at every grid point.
    pub fn from_fn(grid: &TorusGrid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|v| v * t).collect())
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|v| v + c).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Flat index of the maximum; ties go to the smallest row-major index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `(∫ u² dv)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `(∫ |u|^p dv)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Trigonometric interpolant through the grid values.
    pub fn interpolant(&self) -> TrigInterpolant {
        let scale = 1.0 / self.grid.len() as f64;
        let coeffs = self
            .grid
            .forward(&self.values)
            .into_iter()
            .map(|c| c * scale)
            .collect();
        TrigInterpolant {
            grid: self.grid.clone(),
            coeffs,
        }
    }
}

/// Band-limited interpolant, exact at grid points. The Nyquist mode is
/// evaluated through its real symmetric form `cos(π res x)`.
pub struct TrigInterpolant {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.grid.dim();
        let res = self.grid.res();
        assert_eq!(x.len(), n, "point dimension mismatch");
        let mut current = self.coeffs.clone();
        let mut phase = vec![Complex64::new(0.0, 0.0); res];
        for axis in (0..n).rev() {
            let xa = x[axis];
            for (i, p) in phase.iter_mut().enumerate() {
                *p = if i == res / 2 {
                    Complex64::new((PI * res as f64 * xa).cos(), 0.0)
                } else {
                    let k = wavenumber(i, res) as f64;
                    Complex64::from_polar(1.0, 2.0 * PI * k * xa)
                };
            }
            current = current
                .chunks_exact(res)
                .map(|line| line.iter().zip(&phase).map(|(c, p)| c * p).sum())
                .collect();
        }
        current[0].re
    }
}

/// Neumaier-compensated sum; error independent of the number of terms to
/// first order.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `∫ u dv = cell_volume · Σ u`.
pub fn integrate(u: &ScalarField) -> f64 {
    compensated_sum(u.values.iter().copied()) * u.grid.cell_volume()
}

/// Spectral Laplacian `Δ = -div ∇`: mode `k` is multiplied by `(2π|k|)²`.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let grid = &u.grid;
    let mut spectrum = grid.forward(&u.values);
    for (c, s) in spectrum.iter_mut().zip(grid.symbol()) {
        *c *= *s;
    }
    ScalarField::from_raw(grid, grid.inverse_real(spectrum))
}

/// `∫ |∇u|² dv` via Parseval on the spectral symbol.
pub fn dirichlet_energy(u: &ScalarField) -> f64 {
    let grid = &u.grid;
    let spectrum = grid.forward(&u.values);
    spectral_energy(grid, &spectrum)
}

pub(crate) fn spectral_energy(grid: &TorusGrid, spectrum: &[Complex64]) -> f64 {
    let n = grid.len() as f64;
    spectrum.iter()
        .zip(grid.symbol())
        .map(|(c, s)| s * c.norm_sqr())
        .sum::<f64>()
        / (n * n)
}

/// Componentwise spectral gradient. The Nyquist mode of each derivative is
/// dropped, so `∂_a` of a real field stays real.
pub fn gradient(u: &ScalarField) -> Vec<ScalarField> {
    let grid = &u.grid;
    let res = grid.res();
    let n = grid.dim();
    let spectrum = grid.forward(&u.values);
    (0..n)
        .map(|axis| {
            let stride = res.pow((n - 1 - axis) as u32);
            let d: Vec<Complex64> = spectrum
                .iter()
                .enumerate()
                .map(|(flat, c)| {
                    let i = (flat / stride) % res;
                    if i == res / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let k = wavenumber(i, res) as f64;
                        c * Complex64::new(0.0, 2.0 * PI * k)
                    }
                })
                .collect();
            ScalarField::from_raw(grid, grid.inverse_real(d))
        })
        .collect()
}

/// Zero-mean `w` with `Δw = rhs - ∫rhs`. Rejects inputs whose mean exceeds
/// `DEFAULT_MEAN_TOL · ‖rhs‖₂`.
pub fn solve_poisson(rhs: &ScalarField) -> Result<ScalarField> {
    solve_poisson_with_tol(rhs, DEFAULT_MEAN_TOL)
}

pub fn solve_poisson_with_tol(rhs: &ScalarField, rel_mean_tol: f64) -> Result<ScalarField> {
    let mean = integrate(rhs);
    let tol = rel_mean_tol * rhs.l2_norm();
    if mean.abs() > tol {
        return Err(Error::NonSolvable { mean, tol });
    }
    Ok(invert_mean_free(rhs))
}

/// Inverts the Laplacian on the mean-free part of `rhs`, discarding its mean.
pub(crate) fn invert_mean_free(rhs: &ScalarField) -> ScalarField {
    let grid = &rhs.grid;
    let mut spectrum = grid.forward(&rhs.values);
    for (c, s) in spectrum.iter_mut().zip(grid.symbol()) {
        if *s == 0.0 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= *s;
        }
    }
    ScalarField::from_raw(grid, grid.inverse_real(spectrum))
}

/// Flat-torus geodesic distance between coordinate vectors in `[0,1)^n`.
pub fn torus_distance_coords(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(1.0);
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub fn torus_distance(x: &GridPoint, y: &GridPoint) -> f64 {
    torus_distance_coords(&x.coords, &y.coords)
}

/// Distance from grid point `center` to every grid point, in flat order.
pub fn distance_field(grid: &TorusGrid, center: usize) -> Vec<f64> {
    let c = grid.coords(center);
    (0..grid.len())
        .map(|i| torus_distance_coords(&c, &grid.coords(i)))
        .collect()
}
