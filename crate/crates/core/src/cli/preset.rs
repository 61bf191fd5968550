use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::functionals::require_admissible;
use crate::subcritical::periodic_bump;
use crate::torus::{ScalarField, TorusGrid};

/// Built-in curvature fields. All have negative mean and positive maximum
/// within their documented parameter ranges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// `cos(2πx₁) - c`, `c ∈ (0, 1)`.
    CosGap { c: f64 },
    /// `(1 + a)·bump_w - a` with the periodic bump of width `w` at the
    /// origin, `a > 0`, `w ∈ (0, 0.5)`.
    BumpNeg { a: f64, w: f64 },
    /// `cos(2πx₁) + cos(2πx₂) - c`, `c ∈ (0, 2)`.
    TwoPeak { c: f64 },
}

impl Preset {
    fn check_range(&self) -> Result<()> {
        let ok = match *self {
            Preset::CosGap { c } => c > 0.0 && c < 1.0,
            Preset::BumpNeg { a, w } => a > 0.0 && a.is_finite() && w > 0.0 && w < 0.5,
            Preset::TwoPeak { c } => c > 0.0 && c < 2.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("preset parameters out of range: {self}")))
        }
    }

    /// Samples the preset and checks admissibility on `grid`.
    pub fn field(&self, grid: &TorusGrid) -> Result<ScalarField> {
        self.check_range()?;
        if matches!(self, Preset::TwoPeak { .. }) && grid.dim() < 2 {
            return Err(Error::Config("twopeak needs dim >= 2".into()));
        }
        let f = match *self {
            Preset::CosGap { c } => ScalarField::from_fn(grid, |x| (2.0 * PI * x[0]).cos() - c)?,
            Preset::TwoPeak { c } => {
                ScalarField::from_fn(grid, |x| (2.0 * PI * x[0]).cos() + (2.0 * PI * x[1]).cos() - c)?
            }
            Preset::BumpNeg { a, w } => {
                let origin = vec![0.0; grid.dim()];
                periodic_bump(grid, &origin, w).map(|b| (1.0 + a) * b - a)?
            }
        };
        require_admissible(&f)?;
        Ok(f)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::CosGap { c } => write!(f, "cosgap:{c}"),
            Preset::BumpNeg { a, w } => write!(f, "bumpneg:{a},{w}"),
            Preset::TwoPeak { c } => write!(f, "twopeak:{c}"),
        }
    }
}

fn parse_params(s: &str, count: usize, name: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("preset {name}: bad parameter list `{s}`: {e}")))?;
    if vals.len() != count {
        return Err(Error::Config(format!(
            "preset {name} takes {count} parameter(s), got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

impl FromStr for Preset {
    type Err = Error;

    /// `name:p1[,p2]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("preset `{s}` must look like name:params")))?;
        let p = match name.trim() {
            "cosgap" => {
                let v = parse_params(params, 1, "cosgap")?;
                Preset::CosGap { c: v[0] }
            }
            "bumpneg" => {
                let v = parse_params(params, 2, "bumpneg")?;
                Preset::BumpNeg { a: v[0], w: v[1] }
            }
            "twopeak" => {
                let v = parse_params(params, 1, "twopeak")?;
                Preset::TwoPeak { c: v[0] }
            }
            other => return Err(Error::Config(format!("unknown preset `{other}`"))),
        };
        p.check_range()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::admissibility;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["cosgap:0.1", "bumpneg:0.5,0.1", "twopeak:0.3"] {
            let p: Preset = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("cosgap:1.5".parse::<Preset>().is_err());
        assert!("cosgap".parse::<Preset>().is_err());
        assert!("bumpneg:0.5".parse::<Preset>().is_err());
        assert!("flat:1".parse::<Preset>().is_err());
    }

    #[test]
    fn presets_are_admissible_and_stable_under_refinement() {
        for p in ["cosgap:0.1", "cosgap:0.9", "bumpneg:0.5,0.1", "twopeak:0.3"] {
            let p: Preset = p.parse().unwrap();
            let a = admissibility(&p.field(&TorusGrid::new(3, 16).unwrap()).unwrap()).unwrap();
            let b = admissibility(&p.field(&TorusGrid::new(3, 32).unwrap()).unwrap()).unwrap();
            assert!(a.admissible && b.admissible);
            assert!((a.mean_f - b.mean_f).abs() < 1e-10, "{p}: {} vs {}", a.mean_f, b.mean_f);
            assert!((a.max_f - b.max_f).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_bump_is_rejected() {
        let p: Preset = "bumpneg:0.01,0.3".parse().unwrap();
        assert!(p.field(&TorusGrid::new(3, 16).unwrap()).is_err());
    }
}
