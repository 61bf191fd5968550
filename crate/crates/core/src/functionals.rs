//! Variational data: admissibility of `f`, the constraint functional, sharp
//! Sobolev constants and curvature recovery.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::torus::{self, GridPoint, ScalarField};

/// Necessary conditions on `f`: `∫f < 0` and `max f > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    /// `∫ f dv`, which is also the mean since the volume is 1.
    pub mean_f: f64,
    pub max_f: f64,
    pub argmax: GridPoint,
    pub nc1: bool,
    pub nc2: bool,
    pub admissible: bool,
}

pub fn admissibility(f: &ScalarField) -> Result<AdmissibilityReport> {
    if f.values().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroCurvature);
    }
    let mean_f = torus::integrate(f);
    let idx = f.argmax();
    let max_f = f.get(idx);
    let nc1 = mean_f < 0.0;
    let nc2 = max_f > 0.0;
    Ok(AdmissibilityReport {
        mean_f,
        max_f,
        argmax: f.grid().point(idx),
        nc1,
        nc2,
        admissible: nc1 && nc2,
    })
}

/// Fails unless `f` is admissible; returns the report otherwise.
pub fn require_admissible(f: &ScalarField) -> Result<AdmissibilityReport> {
    let rep = admissibility(f)?;
    if !rep.admissible {
        return Err(Error::NotAdmissible {
            mean_f: rep.mean_f,
            max_f: rep.max_f,
        });
    }
    Ok(rep)
}

/// Dimension-dependent constants of the critical problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpConstants {
    pub n: usize,
    /// Volume of the unit n-sphere in R^{n+1}.
    pub omega_n: f64,
    pub omega_n_minus_1: f64,
    /// `K(n,2)² = 4/(n(n-2)) ω_n^{-2/n}`.
    pub k_n_2_sq: f64,
    /// `∫_{R^n} U₀^{2*} = (n(n-2))^{-n/2} K(n,2)^{-n}`.
    pub bubble_mass: f64,
    pub two_star: f64,
}

/// `ω_m = 2 π^{(m+1)/2} / Γ((m+1)/2)`.
pub fn sphere_volume(m: usize) -> f64 {
    let a = (m as f64 + 1.0) / 2.0;
    2.0 * PI.powf(a) / gamma(a)
}

pub fn critical_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

pub fn sharp_constants(n: usize) -> Result<SharpConstants> {
    if n < 3 {
        return Err(Error::InvalidDimension { n, min: 3 });
    }
    let nf = n as f64;
    let omega_n = sphere_volume(n);
    let k_n_2_sq = 4.0 / (nf * (nf - 2.0)) * omega_n.powf(-2.0 / nf);
    let bubble_mass = (nf * (nf - 2.0)).powf(-nf / 2.0) * k_n_2_sq.powf(-nf / 2.0);
    Ok(SharpConstants {
        n,
        omega_n,
        omega_n_minus_1: sphere_volume(n - 1),
        k_n_2_sq,
        bubble_mass,
        two_star: critical_exponent(n),
    })
}

/// `∫ f |u|^q dv`.
pub fn constraint_value(f: &ScalarField, u: &ScalarField, q: f64) -> Result<f64> {
    f.check_same_grid(u)?;
    let s = torus::compensated_sum(
        f.values()
            .iter()
            .zip(u.values())
            .map(|(fv, uv)| fv * uv.abs().powf(q)),
    );
    Ok(s * f.grid().cell_volume())
}

/// Rescales `u` onto `{∫ f|u|^q = 1}`.
pub fn normalize_to_constraint(f: &ScalarField, u: &ScalarField, q: f64) -> Result<ScalarField> {
    let value = constraint_value(f, u, q)?;
    if !(value > 0.0) {
        return Err(Error::OutsideConstraintCone { value });
    }
    Ok(u.scaled(value.powf(-1.0 / q)))
}

/// Energy of `u` after normalization into the constraint set: the Rayleigh
/// quotient `∫|∇u|² / (∫ f|u|^q)^{2/q}`.
pub fn rayleigh_value(f: &ScalarField, u: &ScalarField, q: f64) -> Result<f64> {
    let value = constraint_value(f, u, q)?;
    if !(value > 0.0) {
        return Err(Error::OutsideConstraintCone { value });
    }
    Ok(torus::dirichlet_energy(u) / value.powf(2.0 / q))
}

/// Critical energy level `K(n,2)^{-2} (max f)^{-2/2*}`.
pub fn lambda_upper_bound(f: &ScalarField, consts: &SharpConstants) -> Result<f64> {
    let max_f = f.max();
    if !(max_f > 0.0) {
        return Err(Error::NonPositiveMax { max_f });
    }
    Ok(max_f.powf(-2.0 / consts.two_star) / consts.k_n_2_sq)
}

/// `4(n-1)/(n-2)`.
pub fn conformal_factor(n: usize) -> f64 {
    4.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Scalar curvature of the conformal metric built from `u`:
/// `(4(n-1)/(n-2)) Δu / u^{p-1}`. With `p = 2*` this is the conformal
/// curvature relation; with the subcritical exponent of a solution it
/// recovers `(4(n-1)/(n-2)) λ f` up to solver residual.
pub fn recovered_curvature(u: &ScalarField, p: f64) -> Result<ScalarField> {
    let n = u.grid().dim();
    if n < 3 {
        return Err(Error::InvalidDimension { n, min: 3 });
    }
    let min = u.min();
    if !(min > 0.0) {
        return Err(Error::NonPositiveField { min });
    }
    let c = conformal_factor(n);
    let lu = torus::laplacian(u);
    lu.zip_map(u, |l, v| c * l / v.powf(p - 1.0))
}

/// Relative L2 deviation of [`recovered_curvature`] from `(4(n-1)/(n-2)) λ f`.
pub fn curvature_deviation(u: &ScalarField, p: f64, lam: f64, f: &ScalarField) -> Result<f64> {
    let s = recovered_curvature(u, p)?;
    let c = conformal_factor(u.grid().dim()) * lam;
    let target = f.scaled(c);
    let diff = s.zip_map(&target, |a, b| a - b)?;
    let denom = target.l2_norm();
    if denom == 0.0 {
        return Ok(diff.l2_norm());
    }
    Ok(diff.l2_norm() / denom)
}

/// Slack `‖u‖²_{2*} - K(n,2)²‖∇u‖² - B‖u‖²₂` of the sharp Sobolev inequality
/// with remainder constant `B`. Nonpositive means the inequality holds.
pub fn sobolev_check(u: &ScalarField, b: f64, consts: &SharpConstants) -> f64 {
    let lhs = u.lp_norm(consts.two_star).powi(2);
    let l2 = u.l2_norm();
    lhs - consts.k_n_2_sq * torus::dirichlet_energy(u) - b * l2 * l2
}
