//! Constrained minimization of the Dirichlet energy over
//! `H_q = {u : ∫ f|u|^q = 1}` by projected gradient descent, and continuation
//! of the exponent toward `2*`.
//!
//! One descent step is `u ← max(u - τ(Δu - λ f u^{q-1}), 0)` followed by
//! renormalization into `H_q`, with `λ` equal to the current energy. Steps
//! that would raise the energy are retried with a smaller `τ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blowup;
use crate::error::{Error, Result};
use crate::functionals::{
    self, constraint_value, critical_exponent, lambda_upper_bound, require_admissible,
    sharp_constants,
};
use crate::torus::{self, GridPoint, ScalarField, TorusGrid};

/// Relative slack below which an energy increase counts as rounding.
pub const ENERGY_SLACK: f64 = 1e-13;

#[derive(Clone, Debug)]
pub enum Init {
    /// Smooth periodic bump centered at `argmax f`, width in grid cells.
    Bump { width_cells: f64 },
    WarmStart(ScalarField),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Initial descent step. `None` uses `1 / max_eigenvalue` of the grid.
    pub step: Option<f64>,
    /// Target relative Euler-Lagrange residual.
    pub tol: f64,
    pub max_iters: usize,
    pub init: Init,
    /// Step shrink factor on rejected steps, in (0, 1).
    pub backtrack: f64,
    /// Step growth factor after accepted steps, >= 1.
    pub growth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: None,
            tol: 1e-7,
            max_iters: 200_000,
            init: Init::Bump { width_cells: 4.0 },
            backtrack: 0.5,
            growth: 1.05,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return Err(Error::InvalidArgument(format!("step must be positive, got {s}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "backtracking factor must lie in (0,1), got {}",
                self.backtrack
            )));
        }
        if !(self.growth >= 1.0) {
            return Err(Error::InvalidArgument(format!("growth must be >= 1, got {}", self.growth)));
        }
        Ok(())
    }

    pub fn with_init(&self, init: Init) -> Self {
        Self {
            init,
            ..self.clone()
        }
    }
}

/// A minimizer record.
#[derive(Clone, Debug)]
pub struct SubcriticalSolution {
    pub u: ScalarField,
    pub q: f64,
    pub lam: f64,
    pub el_residual: f64,
    pub energy: f64,
    pub iters: usize,
    pub x_max: GridPoint,
    pub u_max: f64,
}

impl SubcriticalSolution {
    /// Builds a record from an arbitrary field, taking `λ` as given and
    /// recomputing every derived quantity.
    pub fn from_field(u: ScalarField, q: f64, lam: f64, f: &ScalarField) -> Result<Self> {
        let energy = torus::dirichlet_energy(&u);
        let el = el_residual(&u, lam, f, q)?;
        let idx = u.argmax();
        Ok(Self {
            x_max: u.grid().point(idx),
            u_max: u.get(idx),
            u,
            q,
            lam,
            el_residual: el,
            energy,
            iters: 0,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u.grid()
    }

    pub fn x_max_flat(&self) -> usize {
        self.grid()
            .flat_index(&self.x_max.index)
            .expect("x_max lies on the solution grid")
    }
}

fn check_exponent(n: usize, q: f64) -> Result<f64> {
    let hi = critical_exponent(n);
    if !(q > 2.0 && q < hi) {
        return Err(Error::ExponentOutOfRange { q, lo: 2.0, hi });
    }
    Ok(hi)
}

/// `‖Δu - λ f u^{q-1}‖₂ / (λ ‖f u^{q-1}‖₂)`.
pub fn el_residual(u: &ScalarField, lam: f64, f: &ScalarField, q: f64) -> Result<f64> {
    u.check_same_grid(f)?;
    let lu = torus::laplacian(u);
    let (num, den) = residual_parts(lu.values(), u.values(), f.values(), lam, q);
    if den == 0.0 {
        return Err(Error::ZeroDenominator("Euler-Lagrange residual"));
    }
    Ok(num / den)
}

fn residual_parts(lu: &[f64], u: &[f64], f: &[f64], lam: f64, q: f64) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&l, &v), &fv) in lu.iter().zip(u).zip(f) {
        let p = fv * v.abs().powf(q - 1.0);
        let r = l - lam * p;
        num += r * r;
        den += p * p;
    }
    (num.sqrt(), lam.abs() * den.sqrt())
}

/// Periodic bump `Π_a exp(κ (cos 2π(x_a - c_a) - 1))`, which behaves like
/// `exp(-|x-c|²/(2w²))` near the center.
pub fn periodic_bump(grid: &TorusGrid, center: &[f64], width: f64) -> ScalarField {
    let kappa = 1.0 / (4.0 * PI * PI * width * width);
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            x.iter()
                .zip(center)
                .map(|(xa, ca)| kappa * ((2.0 * PI * (xa - ca)).cos() - 1.0))
                .sum::<f64>()
                .exp()
        })
        .collect();
    ScalarField::from_raw(grid, values)
}

/// Bump at `argmax f`, narrowed until it enters the positive cone.
fn bump_init(f: &ScalarField, q: f64, width_cells: f64) -> Result<ScalarField> {
    let grid = f.grid();
    let center = grid.coords(f.argmax());
    let mut width = width_cells * grid.spacing();
    let mut last = 0.0;
    for _ in 0..8 {
        let b = periodic_bump(grid, &center, width);
        let c = constraint_value(f, &b, q)?;
        if c > 0.0 {
            return functionals::normalize_to_constraint(f, &b, q);
        }
        last = c;
        width *= 0.5;
    }
    Err(Error::OutsideConstraintCone { value: last })
}

fn initial_iterate(f: &ScalarField, q: f64, init: &Init) -> Result<ScalarField> {
    match init {
        Init::Bump { width_cells } => bump_init(f, q, *width_cells),
        Init::WarmStart(u0) => {
            u0.check_same_grid(f)?;
            let clipped = u0.map(|v| v.max(0.0))?;
            match functionals::normalize_to_constraint(f, &clipped, q) {
                Ok(u) => Ok(u),
                Err(Error::OutsideConstraintCone { .. }) => bump_init(f, q, 4.0),
                Err(e) => Err(e),
            }
        }
    }
}

struct Iterate {
    u: Vec<f64>,
    spectrum: Vec<Complex64>,
    energy: f64,
}

impl Iterate {
    fn new(grid: &TorusGrid, u: Vec<f64>) -> Self {
        let spectrum = grid.forward(&u);
        let energy = torus::spectral_energy(grid, &spectrum);
        Self { u, spectrum, energy }
    }
}

/// `E(v) - E(u)` from the spectrum of `v - u`, which keeps the difference
/// accurate after the energies themselves agree to rounding.
fn energy_change(grid: &TorusGrid, cur: &Iterate, v: &[f64]) -> f64 {
    let diff: Vec<f64> = v.iter().zip(&cur.u).map(|(a, b)| a - b).collect();
    let d_hat = grid.forward(&diff);
    let n = grid.len() as f64;
    d_hat
        .iter()
        .zip(&cur.spectrum)
        .zip(grid.symbol())
        .map(|((d, c), s)| s * (2.0 * (d.conj() * c).re + d.norm_sqr()))
        .sum::<f64>()
        / (n * n)
}

/// Minimizes `∫|∇u|²` over `H_q`.
pub fn minimize(f: &ScalarField, q: f64, cfg: &SolverConfig) -> Result<SubcriticalSolution> {
    cfg.validate()?;
    require_admissible(f)?;
    let grid = f.grid().clone();
    check_exponent(grid.dim(), q)?;

    let u0 = initial_iterate(f, q, &cfg.init)?;
    let fv = f.values();
    let h = grid.cell_volume();
    let tau_max = 1.9 / grid.max_eigenvalue();
    let mut tau = cfg.step.unwrap_or(1.0 / grid.max_eigenvalue());
    let tau_min = tau * 1e-14;

    let mut cur = Iterate::new(&grid, u0.into_values());
    let mut grad = vec![0.0; grid.len()];
    let mut cand = vec![0.0; grid.len()];
    let mut iters = 0;

    loop {
        let lam = cur.energy;
        let lap_hat: Vec<Complex64> = cur
            .spectrum
            .iter()
            .zip(grid.symbol())
            .map(|(c, s)| c * s)
            .collect();
        let lu = grid.inverse_real(lap_hat);
        let (num, den) = residual_parts(&lu, &cur.u, fv, lam, q);
        let residual = if den > 0.0 { num / den } else { f64::INFINITY };

        if residual <= cfg.tol || iters >= cfg.max_iters {
            let u = ScalarField::new(&grid, cur.u)?;
            let idx = u.argmax();
            let sol = SubcriticalSolution {
                x_max: grid.point(idx),
                u_max: u.get(idx),
                u,
                q,
                lam,
                el_residual: residual,
                energy: lam,
                iters,
            };
            if residual <= cfg.tol {
                return Ok(sol);
            }
            return Err(Error::NonConvergence {
                q,
                iters,
                residual,
                best: Box::new(sol),
            });
        }

        for (((g, &l), &v), &fval) in grad.iter_mut().zip(&lu).zip(&cur.u).zip(fv) {
            *g = l - lam * fval * v.powf(q - 1.0);
        }

        let next = loop {
            for ((w, &v), &g) in cand.iter_mut().zip(&cur.u).zip(&grad) {
                *w = (v - tau * g).max(0.0);
            }
            let c = torus::compensated_sum(cand.iter().zip(fv).map(|(w, fval)| fval * w.powf(q))) * h;
            if c > 0.0 {
                let t = c.powf(-1.0 / q);
                let v: Vec<f64> = cand.iter().map(|w| w * t).collect();
                if energy_change(&grid, &cur, &v) <= lam * ENERGY_SLACK {
                    break Iterate::new(&grid, v);
                }
            }
            tau *= cfg.backtrack;
            if tau < tau_min {
                let u = ScalarField::new(&grid, cur.u)?;
                let idx = u.argmax();
                return Err(Error::NonConvergence {
                    q,
                    iters,
                    residual,
                    best: Box::new(SubcriticalSolution {
                        x_max: grid.point(idx),
                        u_max: u.get(idx),
                        u,
                        q,
                        lam,
                        el_residual: residual,
                        energy: lam,
                        iters,
                    }),
                });
            }
        };
        cur = next;
        tau = (tau * cfg.growth).min(tau_max.max(tau));
        iters += 1;
    }
}

/// Default exponent schedule `q_k = 2* - (2* - q₀)/2^k`, `q₀ = 2 + (2*-2)/2`.
pub fn default_schedule(n: usize, steps: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidDimension { n, min: 3 });
    }
    let ts = critical_exponent(n);
    let q0 = 2.0 + (ts - 2.0) / 2.0;
    Ok((0..steps)
        .map(|k| ts - (ts - q0) / 2f64.powi(k as i32))
        .collect())
}

/// Per-exponent summary along a continuation run.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub q: f64,
    pub lam: f64,
    pub u_max: f64,
    pub x_max: GridPoint,
    pub mu_q: Option<f64>,
    pub eta_q: Option<f64>,
    pub el_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ContinuationTrace {
    pub entries: Vec<TraceEntry>,
    pub schedule: Vec<f64>,
    /// `K(n,2)^{-2} (max f)^{-2/2*}`.
    pub bound: f64,
    /// The minimizer at each scheduled exponent, in schedule order.
    pub solutions: Vec<SubcriticalSolution>,
}

impl ContinuationTrace {
    pub fn last(&self) -> Option<&SubcriticalSolution> {
        self.solutions.last()
    }
}

/// Radius used for `η_q` in continuation summaries.
pub const ETA_DELTA: f64 = 0.25;

/// Solves along `schedule`, warm-starting each exponent from the previous
/// minimizer.
pub fn continuation(f: &ScalarField, schedule: &[f64], cfg: &SolverConfig) -> Result<ContinuationTrace> {
    require_admissible(f)?;
    let n = f.grid().dim();
    let consts = sharp_constants(n)?;
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty exponent schedule".into()));
    }
    for w in schedule.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidArgument(format!(
                "schedule must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    for &q in schedule {
        check_exponent(n, q)?;
    }
    let bound = lambda_upper_bound(f, &consts)?;

    let mut entries = Vec::with_capacity(schedule.len());
    let mut solutions: Vec<SubcriticalSolution> = Vec::with_capacity(schedule.len());
    for &q in schedule {
        let step_cfg = match solutions.last() {
            Some(prev) => cfg.with_init(Init::WarmStart(prev.u.clone())),
            None => cfg.clone(),
        };
        let sol = minimize(f, q, &step_cfg).map_err(|e| Error::ContinuationFailed {
            q,
            source: Box::new(e),
        })?;
        entries.push(TraceEntry {
            q,
            lam: sol.lam,
            u_max: sol.u_max,
            x_max: sol.x_max.clone(),
            mu_q: blowup::concentration_scale(&sol, f).ok(),
            eta_q: blowup::eta(&sol, ETA_DELTA).ok(),
            el_residual: sol.el_residual,
        });
        solutions.push(sol);
    }
    Ok(ContinuationTrace {
        entries,
        schedule: schedule.to_vec(),
        bound,
        solutions,
    })
}

/// Residuals of the two integral identities satisfied by a solution.
#[derive(Clone, Copy, Debug)]
pub struct IdentityResiduals {
    /// `|∫ f u^{q-1}|`, which vanishes after integrating the equation.
    pub integral: f64,
    /// `|∫ f + (q-1)/λ ∫ u^{-q}|∇u|²|`, from pairing with `u^{1-q}`.
    /// `None` when `u` touches the positivity floor.
    pub weighted_gradient: Option<f64>,
}

/// `|∫ u Δu dv / ∫ f u^q dv - λ| / λ`, the Euler-Lagrange equation paired
/// with `u` and evaluated by real-space quadrature.
pub fn multiplier_residual(sol: &SubcriticalSolution, f: &ScalarField) -> Result<f64> {
    let u = &sol.u;
    u.check_same_grid(f)?;
    let lu = torus::laplacian(u);
    let h = u.grid().cell_volume();
    let paired: f64 = lu.values().iter().zip(u.values()).map(|(l, v)| l * v).sum::<f64>() * h;
    let c = constraint_value(f, u, sol.q)?;
    if c == 0.0 || sol.lam == 0.0 {
        return Err(Error::ZeroDenominator("multiplier identity"));
    }
    Ok((paired / c - sol.lam).abs() / sol.lam.abs())
}

/// Fraction of `u_max` below which `u` counts as touching zero.
pub const POSITIVITY_FLOOR: f64 = 1e-8;

pub fn necessary_condition_identities(sol: &SubcriticalSolution, f: &ScalarField) -> Result<IdentityResiduals> {
    let u = &sol.u;
    u.check_same_grid(f)?;
    let q = sol.q;
    let h = u.grid().cell_volume();
    let integral = (u
        .values()
        .iter()
        .zip(f.values())
        .map(|(&v, &fv)| fv * v.powf(q - 1.0))
        .sum::<f64>()
        * h)
        .abs();

    let floor = POSITIVITY_FLOOR * sol.u_max;
    let weighted_gradient = if u.min() > floor {
        let grad = torus::gradient(u);
        let weighted: f64 = (0..u.len())
            .map(|i| {
                let g2: f64 = grad.iter().map(|d| d.get(i) * d.get(i)).sum();
                u.get(i).powf(-q) * g2
            })
            .sum::<f64>()
            * h;
        Some((torus::integrate(f) + (q - 1.0) / sol.lam * weighted).abs())
    } else {
        None
    };
    Ok(IdentityResiduals {
        integral,
        weighted_gradient,
    })
}

/// Outcome of the random-probe minimality check.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    /// Rayleigh value of every accepted probe.
    pub values: Vec<f64>,
    pub redraws: usize,
}

impl ProbeReport {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn random_trig(grid: &TorusGrid, rng: &mut ChaCha8Rng, kmax: i64) -> Vec<f64> {
    let n = grid.dim();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..6)
        .map(|_| {
            let k: Vec<f64> = (0..n).map(|_| rng.random_range(-kmax..=kmax) as f64).collect();
            (k, rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0))
        })
        .collect();
    (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            modes
                .iter()
                .map(|(k, a, ph)| {
                    let dot: f64 = k.iter().zip(&x).map(|(ka, xa)| ka * xa).sum();
                    a * (2.0 * PI * (dot + ph)).cos()
                })
                .sum()
        })
        .collect()
}

/// Draws `count` seeded probes in `H_q` and records their Rayleigh values.
/// Probes alternate between localized bumps with smooth random texture and
/// smooth relative perturbations of `sol.u`. Probes outside the positive
/// constraint cone are redrawn.
pub fn sample_minimality(
    f: &ScalarField,
    sol: &SubcriticalSolution,
    count: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let grid = f.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = grid.coords(f.argmax());
    let mut values = Vec::with_capacity(count);
    let mut redraws = 0;
    while values.len() < count {
        if redraws > 100 * count.max(1) {
            return Err(Error::InvalidArgument("probe generator keeps leaving the positive cone".into()));
        }
        let texture = random_trig(grid, &mut rng, 2);
        let probe: Vec<f64> = if values.len() % 2 == 0 {
            let width = rng.random_range(0.05..0.3);
            let bump = periodic_bump(grid, &center, width);
            let amp = rng.random_range(0.0..0.5);
            let floor = rng.random_range(0.0..0.3);
            bump.values()
                .iter()
                .zip(&texture)
                .map(|(b, t)| floor + b * (1.0 + amp * t))
                .collect()
        } else {
            let eps = rng.random_range(0.005..0.2);
            sol.u
                .values()
                .iter()
                .zip(&texture)
                .map(|(u, t)| u * (1.0 + eps * t))
                .collect()
        };
        let v = ScalarField::new(grid, probe)?;
        match functionals::rayleigh_value(f, &v, sol.q) {
            Ok(r) => values.push(r),
            Err(Error::OutsideConstraintCone { .. }) => redraws += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ProbeReport { values, redraws })
}
