//! Concentration diagnostics for a family of subcritical minimizers: the
//! scale `μ_q`, comparison with the standard bubble, the weak and envelope
//! pointwise estimates, `η_q`, and the residual of the asymptotic expansion.
//!
//! Nothing here aborts a run. Where a quantity is undefined the report
//! carries `None`.

use crate::error::{Error, Result};
use crate::functionals::{lambda_upper_bound, SharpConstants};
use crate::green::{self, GreenContext};
use crate::subcritical::SubcriticalSolution;
use crate::torus::{self, ScalarField, TorusGrid};

/// The standard bubble `U₀(x) = (1+|x|²)^{1-n/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BubbleProfile {
    pub n: usize,
}

impl BubbleProfile {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn at_radius(&self, r: f64) -> f64 {
        (1.0 + r * r).powf(1.0 - self.n as f64 / 2.0)
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (1.0 + r2).powf(1.0 - self.n as f64 / 2.0)
    }

    /// Radial Laplacian `-(U'' + (n-1)/r U')` by centered differences.
    /// At `r = 0` the limit `-n U''(0)` is used.
    pub fn fd_laplacian(&self, r: f64, step: f64) -> f64 {
        let u = |s: f64| self.at_radius(s);
        let n = self.n as f64;
        if r == 0.0 {
            let d2 = (u(step) - 2.0 * u(0.0) + u(-step)) / (step * step);
            return -n * d2;
        }
        let d2 = (u(r + step) - 2.0 * u(r) + u(r - step)) / (step * step);
        let d1 = (u(r + step) - u(r - step)) / (2.0 * step);
        -(d2 + (n - 1.0) / r * d1)
    }
}

/// Maximum relative residual of `ΔU₀ = n(n-2) U₀^{2*-1}` over `radii`,
/// with finite-difference step `1e-3`.
pub fn bubble_residual(n: usize, radii: &[f64]) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidDimension { n, min: 3 });
    }
    if let Some(&r) = radii.iter().find(|&&r| !(0.0..=10.0).contains(&r)) {
        return Err(Error::InvalidArgument(format!("radius {r} outside [0, 10]")));
    }
    let b = BubbleProfile::new(n);
    let nf = n as f64;
    let p = 2.0 * nf / (nf - 2.0) - 1.0;
    Ok(radii
        .iter()
        .map(|&r| {
            let rhs = nf * (nf - 2.0) * b.at_radius(r).powf(p);
            (b.fd_laplacian(r, 1e-3) - rhs).abs() / rhs
        })
        .fold(0.0, f64::max))
}

/// `μ = (n(n-2) / (λ f_max))^{1/2} u_max^{-(q-2)/2}`.
pub fn scale_from_parts(n: usize, lam: f64, f_at_max: f64, u_max: f64, q: f64) -> Result<f64> {
    if !(f_at_max > 0.0) {
        return Err(Error::UndefinedScale { f_at_max });
    }
    let nf = n as f64;
    Ok((nf * (nf - 2.0) / (lam * f_at_max)).sqrt() * u_max.powf(-(q - 2.0) / 2.0))
}

pub fn concentration_scale(sol: &SubcriticalSolution, f: &ScalarField) -> Result<f64> {
    let idx = sol.x_max_flat();
    scale_from_parts(sol.grid().dim(), sol.lam, f.get(idx), sol.u_max, sol.q)
}

/// `μ · res > 1`.
pub fn is_resolved(mu: f64, grid: &TorusGrid) -> bool {
    mu * grid.res() as f64 > 1.0
}

/// Sampled rescaled profile `v(x) = u(x_q + μx)/u_max` on a lattice in `B(0, R)`.
#[derive(Clone, Debug)]
pub struct ProfileSample {
    pub mu: f64,
    pub window_r: f64,
    /// `(|x|, v(x), U₀(x))` per sample.
    pub samples: Vec<(f64, f64, f64)>,
    pub sup_err: f64,
}

/// Lattice points per unit of window radius along each axis.
pub const PROFILE_SAMPLES_PER_RADIUS: usize = 4;

pub fn rescaled_profile_with_scale(sol: &SubcriticalSolution, mu: f64, window_r: f64) -> Result<ProfileSample> {
    let grid = sol.grid();
    let limit = grid.period() / 4.0;
    if window_r * mu > limit {
        return Err(Error::WindowTooLarge {
            radius: window_r * mu,
            limit,
        });
    }
    if !is_resolved(mu, grid) {
        return Err(Error::UnderResolved {
            mu_res: mu * grid.res() as f64,
        });
    }
    let n = grid.dim();
    let bubble = BubbleProfile::new(n);
    let interp = sol.u.interpolant();
    let center = sol.x_max.coords.clone();
    let m = PROFILE_SAMPLES_PER_RADIUS as i64;
    let side = (2 * m + 1) as usize;
    let spacing = window_r / m as f64;

    let mut samples = Vec::new();
    let mut sup_err: f64 = 0.0;
    let mut offset = vec![0.0; n];
    let mut pos = vec![0.0; n];
    for t in 0..side.pow(n as u32) {
        let mut rem = t;
        for o in offset.iter_mut() {
            *o = ((rem % side) as i64 - m) as f64 * spacing;
            rem /= side;
        }
        let r = offset.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > window_r * (1.0 + 1e-12) {
            continue;
        }
        for ((p, c), o) in pos.iter_mut().zip(&center).zip(&offset) {
            *p = (c + mu * o).rem_euclid(1.0);
        }
        let v = interp.eval(&pos) / sol.u_max;
        let u0 = bubble.at_radius(r);
        sup_err = sup_err.max((v - u0).abs());
        samples.push((r, v, u0));
    }
    Ok(ProfileSample {
        mu,
        window_r,
        samples,
        sup_err,
    })
}

pub fn rescaled_profile(sol: &SubcriticalSolution, f: &ScalarField, window_r: f64) -> Result<ProfileSample> {
    let mu = concentration_scale(sol, f)?;
    rescaled_profile_with_scale(sol, mu, window_r)
}

/// `(w_max, w_tail)` for `w = d(x_q, ·)^{2/(q-2)} u`.
pub fn weak_estimate_stats(sol: &SubcriticalSolution, mu: f64, r: f64) -> (f64, f64) {
    let grid = sol.grid();
    let dist = torus::distance_field(grid, sol.x_max_flat());
    let power = 2.0 / (sol.q - 2.0);
    let radius = r * mu;
    let mut w_max: f64 = 0.0;
    let mut w_tail: f64 = 0.0;
    for (&d, &u) in dist.iter().zip(sol.u.values()) {
        let w = d.powf(power) * u;
        w_max = w_max.max(w);
        if d >= radius {
            w_tail = w_tail.max(w);
        }
    }
    (w_max, w_tail)
}

/// `sup u` outside the ball `B(x_q, δ)`.
pub fn eta(sol: &SubcriticalSolution, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < sol.grid().period() / 2.0) {
        return Err(Error::BallCoversTorus { delta });
    }
    let dist = torus::distance_field(sol.grid(), sol.x_max_flat());
    dist.iter()
        .zip(sol.u.values())
        .filter(|(&d, _)| d >= delta)
        .map(|(_, &u)| u)
        .reduce(f64::max)
        .ok_or(Error::BallCoversTorus { delta })
}

#[derive(Clone, Copy, Debug)]
pub struct EnvelopeCheck {
    pub pass: bool,
    /// `max u / (C_ε · envelope)` outside `B(x_q, Rμ)`; infinite when `C_ε = 0`.
    pub worst_ratio: f64,
    /// Smallest `C_ε` for which the check passes.
    pub fitted_c: f64,
}

/// Tests `u ≤ C_ε (μ^{(n-2)(1-2ε)/2} d^{(2-n)(1-ε)} + η d^{(2-n)ε})` outside
/// `B(x_q, Rμ)`. `ε` must lie in `(0, 2/(n+2))`.
pub fn envelope_check(
    sol: &SubcriticalSolution,
    eps: f64,
    c_eps: f64,
    r: f64,
    mu: f64,
    eta_q: f64,
) -> Result<EnvelopeCheck> {
    let grid = sol.grid();
    let nf = grid.dim() as f64;
    let eps_hi = 2.0 / (nf + 2.0);
    if !(eps > 0.0 && eps < eps_hi) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, {eps_hi})")));
    }
    if !(c_eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("C_eps must be nonnegative, got {c_eps}")));
    }
    let dist = torus::distance_field(grid, sol.x_max_flat());
    let radius = r * mu;
    let a = mu.powf((nf - 2.0) * (1.0 - 2.0 * eps) / 2.0);
    let mut fitted: f64 = 0.0;
    for (&d, &u) in dist.iter().zip(sol.u.values()) {
        if d < radius || d == 0.0 {
            continue;
        }
        let env = a * d.powf((2.0 - nf) * (1.0 - eps)) + eta_q * d.powf((2.0 - nf) * eps);
        fitted = fitted.max(u / env);
    }
    let worst_ratio = if c_eps == 0.0 {
        if fitted > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        fitted / c_eps
    };
    Ok(EnvelopeCheck {
        pass: worst_ratio <= 1.0,
        worst_ratio,
        fitted_c: fitted,
    })
}

/// Inputs of the asymptotic model
/// `ū + 2ⁿ(ω_{n-1}/n) u_max^{-1} φ(y) + u_max (1 + d²/μ²)^{-(n-2)/2} Φ(x_q, y)`.
pub struct ExpansionModel<'a> {
    pub consts: &'a SharpConstants,
    pub center: usize,
    pub mean: f64,
    pub u_max: f64,
    pub mu: f64,
    pub phi: &'a ScalarField,
    pub green_column: &'a ScalarField,
}

impl ExpansionModel<'_> {
    pub fn eval(&self, y: usize, d: f64) -> f64 {
        let nf = self.consts.n as f64;
        let cap_phi = (nf - 2.0) * self.consts.omega_n_minus_1 * d.powf(nf - 2.0) * self.green_column.get(y);
        self.mean
            + 2f64.powf(nf) * self.consts.omega_n_minus_1 / nf / self.u_max * self.phi.get(y)
            + self.u_max * (1.0 + d * d / (self.mu * self.mu)).powf(-(nf - 2.0) / 2.0) * cap_phi
    }

    /// `sup_{d(x_q,y) ≥ 4μ} |u(y) - model(y)| · u_max`, or `None` if no grid
    /// point lies that far out.
    pub fn residual(&self, u: &ScalarField) -> Option<f64> {
        let dist = torus::distance_field(u.grid(), self.center);
        dist.iter()
            .enumerate()
            .filter(|(_, &d)| d >= 4.0 * self.mu)
            .map(|(y, &d)| (u.get(y) - self.eval(y, d)).abs() * self.u_max)
            .reduce(f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExpansionResidual {
    pub sup_residual: Option<f64>,
    /// `|η^{q-1} + 2ⁿ ω_{n-1}/(n f̄) u_max^{-1}| / u_max^{-1}`.
    pub eta_relation: f64,
}

pub fn expansion_residual(
    sol: &SubcriticalSolution,
    f: &ScalarField,
    ctx: &GreenContext,
    mu: f64,
    eta_q: f64,
) -> Result<ExpansionResidual> {
    let consts = ctx.consts();
    let lam_star = lambda_upper_bound(f, consts)?;
    let phi = green::phi_field(ctx, f, lam_star)?;
    let center = sol.x_max_flat();
    let column = ctx.column(center);
    let model = ExpansionModel {
        consts,
        center,
        mean: torus::integrate(&sol.u),
        u_max: sol.u_max,
        mu,
        phi: &phi,
        green_column: &column,
    };
    let nf = consts.n as f64;
    let f_bar = torus::integrate(f);
    let lead = 2f64.powf(nf) * consts.omega_n_minus_1 / (nf * f_bar) / sol.u_max;
    Ok(ExpansionResidual {
        sup_residual: model.residual(&sol.u),
        eta_relation: (eta_q.powf(sol.q - 1.0) + lead).abs() * sol.u_max,
    })
}

#[derive(Clone, Debug)]
pub struct BlowupConfig {
    /// Profile window radius in units of `μ`; clipped to `period/(4μ)`.
    pub window_r: f64,
    /// Tail radius `R` for the weak and envelope estimates, in units of `μ`.
    pub tail_r: f64,
    pub eps: f64,
    pub c_eps: f64,
    pub delta: f64,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self {
            window_r: 2.0,
            tail_r: 4.0,
            eps: 0.1,
            c_eps: 100.0,
            delta: 0.25,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlowupReport {
    pub q: f64,
    pub mu_q: Option<f64>,
    pub profile_sup_err: Option<f64>,
    pub w_max: f64,
    pub w_tail: Option<f64>,
    pub eta_q: Option<f64>,
    /// `u_max^{(2*-q)(n-2)/2}`.
    pub a_est: f64,
    pub envelope_ok: Option<bool>,
    /// Fitted envelope constant.
    pub c_eps: Option<f64>,
    pub expansion_residual: Option<f64>,
    pub eta_relation: Option<f64>,
    /// Set when `μ · res <= 1`.
    pub under_resolved: bool,
}

pub fn analyze(
    sol: &SubcriticalSolution,
    f: &ScalarField,
    ctx: &GreenContext,
    cfg: &BlowupConfig,
) -> BlowupReport {
    let grid = sol.grid();
    let n = grid.dim() as f64;
    let two_star = 2.0 * n / (n - 2.0);
    let mu = concentration_scale(sol, f).ok();
    let eta_q = eta(sol, cfg.delta).ok();
    let a_est = sol.u_max.powf((two_star - sol.q) * (n - 2.0) / 2.0);

    let (w_max_all, _) = weak_estimate_stats(sol, 0.0, 0.0);
    let mut report = BlowupReport {
        q: sol.q,
        mu_q: mu,
        profile_sup_err: None,
        w_max: w_max_all,
        w_tail: None,
        eta_q,
        a_est,
        envelope_ok: None,
        c_eps: None,
        expansion_residual: None,
        eta_relation: None,
        under_resolved: mu.is_some_and(|m| !is_resolved(m, grid)),
    };
    let Some(mu) = mu else {
        return report;
    };
    let window = cfg.window_r.min(grid.period() / (4.0 * mu));
    report.profile_sup_err = rescaled_profile_with_scale(sol, mu, window).ok().map(|p| p.sup_err);
    report.w_tail = Some(weak_estimate_stats(sol, mu, cfg.tail_r).1);
    if let Some(eta_q) = eta_q {
        if let Ok(env) = envelope_check(sol, cfg.eps, cfg.c_eps, cfg.tail_r, mu, eta_q) {
            report.envelope_ok = Some(env.fitted_c <= cfg.c_eps);
            report.c_eps = Some(env.fitted_c);
        }
        if let Ok(exp) = expansion_residual(sol, f, ctx, mu, eta_q) {
            report.expansion_residual = exp.sup_residual;
            report.eta_relation = Some(exp.eta_relation);
        }
    }
    report
}
