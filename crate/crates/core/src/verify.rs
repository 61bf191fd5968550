//! Identity checks that need no PDE solve, the strict-gap experiment built on
//! `f̃ = 2f - max f`, and the corrected limit of Jung's expression.

use std::f64::consts::PI;

use crate::blowup;
use crate::error::{Error, Result};
use crate::functionals::{self, lambda_upper_bound, sharp_constants, sphere_volume};
use crate::subcritical::{continuation, SolverConfig};
use crate::torus::{self, ScalarField, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// Pass iff `|measured - expected| <= tolerance`.
    Within,
    /// Pass iff `measured > expected`.
    Above,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationOutcome {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl VerificationOutcome {
    pub fn within(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tolerance,
            relation: Relation::Within,
            pass: (measured - expected).abs() <= tolerance,
        }
    }

    /// Relative comparison: tolerance is `rel · |expected|`.
    pub fn relative(name: impl Into<String>, measured: f64, expected: f64, rel: f64) -> Self {
        Self::within(name, measured, expected, rel * expected.abs())
    }

    pub fn above(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected: threshold,
            tolerance: 0.0,
            relation: Relation::Above,
            pass: measured > threshold,
        }
    }
}

/// `((1 - x^x) / (s^{x²} - x^x))^{-ln x / x}`, evaluated in log space.
/// Tends to `1/s` as `x → 0⁺`.
pub fn jung_limit(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    if !(x > 0.0 && x < 0.1) {
        return Err(Error::InvalidArgument(format!("x must lie in (0, 0.1), got {x}")));
    }
    if s == 1.0 {
        return Ok(1.0);
    }
    // 1 - x^x = -expm1(x ln x) and s^{x²} - x^x = expm1(x² ln s) - expm1(x ln x),
    // so the base is 1 / (1 + b/a) with a = -expm1(x ln x) > 0, b = expm1(x² ln s).
    let a = -(x * x.ln()).exp_m1();
    let b = (x * x * s.ln()).exp_m1();
    if a == 0.0 || b == 0.0 {
        return Err(Error::JungUnderflow { s, x });
    }
    let ratio = b / a;
    if !(ratio > -1.0) || !ratio.is_finite() {
        return Err(Error::JungUnderflow { s, x });
    }
    // ln value = -ln s · (1 + O(x |ln x|) + O(x ln s / |ln x|)).
    let log_value = x.ln() / x * ratio.ln_1p();
    Ok(log_value.exp())
}

/// `f̃ = 2f - max f`.
pub fn tilde_curvature(f: &ScalarField) -> ScalarField {
    let m = f.max();
    f.map(|v| 2.0 * v - m).expect("finite input stays finite")
}

/// Cross-checks of [`functionals::sharp_constants`] against independent routes.
pub fn bound_consistency(n: usize) -> Result<Vec<VerificationOutcome>> {
    let c = sharp_constants(n)?;
    let nf = n as f64;
    let mass_identity = c.bubble_mass * (nf * (nf - 2.0)).powf(nf / 2.0) * c.k_n_2_sq.powf(nf / 2.0);

    // ω_m by the recurrence ω_m = 2π/(m-1) ω_{m-2}, ω_0 = 2, ω_1 = 2π.
    let mut omega = [2.0, 2.0 * PI];
    for m in 2..=n {
        let next = 2.0 * PI / (m as f64 - 1.0) * omega[m % 2];
        omega[m % 2] = next;
    }
    let omega_rec = omega[n % 2];

    Ok(vec![
        VerificationOutcome::relative(format!("bubble_mass_identity_n{n}"), mass_identity, 1.0, 1e-12),
        VerificationOutcome::relative(format!("omega_recurrence_n{n}"), c.omega_n, omega_rec, 1e-12),
        VerificationOutcome::relative(
            format!("two_star_n{n}"),
            c.two_star * (nf - 2.0),
            2.0 * nf,
            1e-12,
        ),
    ])
}

/// `ω_{n-1} ∫₀^∞ r^{n-1} (1+r²)^{-n} dr` after `r = tan θ`, which turns the
/// integrand into `sin^{n-1}θ cos^{n-1}θ` on `[0, π/2]`. Composite Simpson.
pub fn bubble_mass_quadrature(n: usize, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = PI / 2.0 / panels as f64;
    let g = |t: f64| (t.sin() * t.cos()).powi(n as i32 - 1);
    let mut s = g(0.0) + g(PI / 2.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(i as f64 * h);
    }
    sphere_volume(n - 1) * s * h / 3.0
}

/// The strict-gap experiment on `f̃ = 2f - max f`.
#[derive(Clone, Debug)]
pub struct StrictGapReport {
    pub tilde_max: f64,
    pub tilde_mean: f64,
    pub q_final: f64,
    /// `λ_q(f̃)` at the last scheduled exponent.
    pub lam_tilde: f64,
    /// `‖∇ũ‖²` after normalizing `ũ` into `H_{2*}(f̃)`.
    pub energy_critical: f64,
    /// `∫ f ũ^{2*}`, expected above 1.
    pub f_mass: f64,
    /// Rayleigh value of `ũ` under `f` at the critical exponent.
    pub rayleigh_f: f64,
    pub bound: f64,
    /// `bound - rayleigh_f`.
    pub margin: f64,
    pub outcome: VerificationOutcome,
}

pub fn strict_gap_experiment(f: &ScalarField, cfg: &SolverConfig, schedule: &[f64]) -> Result<StrictGapReport> {
    functionals::require_admissible(f)?;
    let grid = f.grid();
    let consts = sharp_constants(grid.dim())?;
    let ft = tilde_curvature(f);
    let trace = continuation(&ft, schedule, cfg)?;
    let sol = trace.last().expect("nonempty schedule");
    let ts = consts.two_star;

    let ut = functionals::normalize_to_constraint(&ft, &sol.u, ts)?;
    let energy_critical = torus::dirichlet_energy(&ut);
    let f_mass = functionals::constraint_value(f, &ut, ts)?;
    let rayleigh_f = functionals::rayleigh_value(f, &ut, ts)?;
    let bound = lambda_upper_bound(f, &consts)?;
    let margin = bound - rayleigh_f;
    Ok(StrictGapReport {
        tilde_max: ft.max(),
        tilde_mean: torus::integrate(&ft),
        q_final: sol.q,
        lam_tilde: sol.lam,
        energy_critical,
        f_mass,
        rayleigh_f,
        bound,
        margin,
        outcome: VerificationOutcome::above("strict_gap_margin", margin, 0.0),
    })
}

/// Checks that need no descent solve. Used by the `verify` command.
pub fn identity_suite() -> Result<Vec<VerificationOutcome>> {
    let mut out = Vec::new();

    let c3 = sharp_constants(3)?;
    out.push(VerificationOutcome::relative("omega_3", c3.omega_n, 2.0 * PI * PI, 1e-12));
    out.push(VerificationOutcome::relative(
        "k32_sq",
        c3.k_n_2_sq,
        4.0 / 3.0 * (2.0 * PI * PI).powf(-2.0 / 3.0),
        1e-12,
    ));
    out.push(VerificationOutcome::relative("bubble_mass_n3", c3.bubble_mass, PI * PI / 4.0, 1e-12));
    for n in [3, 4, 10] {
        out.extend(bound_consistency(n)?);
    }
    for n in [3, 4] {
        let c = sharp_constants(n)?;
        out.push(VerificationOutcome::relative(
            format!("bubble_mass_quadrature_n{n}"),
            bubble_mass_quadrature(n, 2000),
            c.bubble_mass,
            1e-4,
        ));
        out.push(VerificationOutcome::within(
            format!("bubble_pde_residual_n{n}"),
            blowup::bubble_residual(n, &[0.0, 0.5, 1.0, 2.0, 5.0])?,
            0.0,
            1e-4,
        ));
    }

    for (s, expect, tol) in [(2.0, 0.5, 1e-2), (0.5, 2.0, 2e-2), (1.0, 1.0, 0.0)] {
        out.push(VerificationOutcome::within(
            format!("jung_limit_s{s}"),
            jung_limit(s, 1e-6)?,
            expect,
            tol,
        ));
    }

    let grid = TorusGrid::new(3, 16)?;
    let mode = ScalarField::from_fn(&grid, |x| (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).cos())?;
    let lap = torus::laplacian(&mode);
    let eig = 5.0 * 4.0 * PI * PI;
    let eig_err = lap
        .values()
        .iter()
        .zip(mode.values())
        .map(|(l, m)| (l - eig * m).abs())
        .fold(0.0, f64::max)
        / eig;
    out.push(VerificationOutcome::within("laplacian_single_mode", eig_err, 0.0, 1e-12));
    let back = torus::solve_poisson(&lap)?;
    let rt = back
        .values()
        .iter()
        .zip(mode.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / mode.sup_norm();
    out.push(VerificationOutcome::within("poisson_round_trip", rt, 0.0, 1e-12));
    out.push(VerificationOutcome::relative(
        "energy_cos_mode",
        torus::dirichlet_energy(&ScalarField::from_fn(&grid, |x| (2.0 * PI * x[0]).cos())?),
        2.0 * PI * PI,
        1e-12,
    ));

    let f = ScalarField::from_fn(&grid, |x| (2.0 * PI * x[0]).cos() - 0.1)?;
    let ft = tilde_curvature(&f);
    out.push(VerificationOutcome::within("tilde_max_preserved", ft.max(), f.max(), 0.0));
    out.push(VerificationOutcome::within(
        "tilde_mean",
        torus::integrate(&ft),
        -f.max() + 2.0 * torus::integrate(&f),
        1e-12,
    ));
    let dominated = f
        .values()
        .iter()
        .zip(ft.values())
        .filter(|(a, b)| a < b)
        .count();
    out.push(VerificationOutcome::within("tilde_dominated", dominated as f64, 0.0, 0.0));
    Ok(out)
}
