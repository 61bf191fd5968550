use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::preset::Preset;
use crate::error::{Error, Result};
use crate::functionals::critical_exponent;
use crate::subcritical::default_schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Continue,
    Verify,
    Report,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Mode::Solve),
            "continue" => Ok(Mode::Continue),
            "verify" => Ok(Mode::Verify),
            "report" => Ok(Mode::Report),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected solve, continue, verify or report)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Solve => "solve",
            Mode::Continue => "continue",
            Mode::Verify => "verify",
            Mode::Report => "report",
        })
    }
}

/// How the continuation exponents were specified.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    /// `q_k = 2* - (2* - q₀)/2^k`, `k < steps`.
    Default { steps: usize },
    /// `steps` equispaced exponents from `start` to `end` inclusive.
    Linear { start: f64, end: f64, steps: usize },
    Explicit(Vec<f64>),
}

impl Schedule {
    pub fn exponents(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Schedule::Default { steps } => default_schedule(n, *steps),
            Schedule::Linear { start, end, steps } => Ok(match steps {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*steps)
                    .map(|k| start + (end - start) * k as f64 / (*steps - 1) as f64)
                    .collect(),
            }),
            Schedule::Explicit(v) => Ok(v.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub dim: usize,
    pub res: usize,
    pub preset: Preset,
    /// Exponent for `solve`. Defaults to the midpoint of `(2, 2*)`.
    pub q: Option<f64>,
    pub schedule: Schedule,
    pub tol: f64,
    pub max_iters: usize,
    pub step: Option<f64>,
    pub out: PathBuf,
    /// Directory holding snapshots for `report`. Defaults to `out`.
    pub input: Option<PathBuf>,
    pub seed: u64,
    /// Number of random probes in the `solve` minimality check.
    pub probes: usize,
}

impl RunConfig {
    pub fn solve_exponent(&self) -> f64 {
        self.q.unwrap_or_else(|| 1.0 + critical_exponent(self.dim) / 2.0)
    }

    pub fn input_dir(&self) -> PathBuf {
        self.input.clone().unwrap_or_else(|| self.out.clone())
    }

    /// Canonical `key = value` lines, in fixed order.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        line("mode", self.mode.to_string());
        line("dim", self.dim.to_string());
        line("res", self.res.to_string());
        line("preset", self.preset.to_string());
        if let Some(q) = self.q {
            line("q", format!("{q:?}"));
        }
        match &self.schedule {
            Schedule::Default { steps } => line("q_steps", steps.to_string()),
            Schedule::Linear { start, end, steps } => {
                line("q_start", format!("{start:?}"));
                line("q_end", format!("{end:?}"));
                line("q_steps", steps.to_string());
            }
            Schedule::Explicit(v) => line(
                "schedule",
                v.iter().map(|q| format!("{q:?}")).collect::<Vec<_>>().join(","),
            ),
        }
        line("tol", format!("{:?}", self.tol));
        line("max_iters", self.max_iters.to_string());
        if let Some(step) = self.step {
            line("step", format!("{step:?}"));
        }
        line("out", self.out.display().to_string());
        if let Some(i) = &self.input {
            line("input", i.display().to_string());
        }
        line("seed", self.seed.to_string());
        line("probes", self.probes.to_string());
        s
    }
}

/// Every accepted key, after mapping `-` to `_`.
pub const KEYS: &[&str] = &[
    "mode", "dim", "res", "preset", "q", "q_start", "q_end", "q_steps", "schedule", "tol",
    "max_iters", "step", "out", "input", "seed", "probes",
];

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('-', "_")
}

/// Parses flat `key = value` text. Blank lines and `#` comments are ignored.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((normalize_key(k), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::Config(format!("{key}: cannot parse `{v}`: {e}")))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} must be positive and finite, got {v}")))
    }
}

/// Merges file entries with flag entries, flags taking precedence, and
/// validates the result. Unknown keys are errors.
pub fn parse_config(flags: &[(String, String)], file: Option<&str>) -> Result<RunConfig> {
    let mut entries = match file {
        Some(text) => parse_file(text)?,
        None => Vec::new(),
    };
    entries.extend(flags.iter().map(|(k, v)| (normalize_key(k), v.trim().to_string())));

    let mut mode = None;
    let mut dim = 3usize;
    let mut res = 16usize;
    let mut preset: Preset = "cosgap:0.1".parse()?;
    let mut q = None;
    let (mut q_start, mut q_end, mut q_steps) = (None, None, None);
    let mut explicit = None;
    let mut tol = 1e-7;
    let mut max_iters = 200_000usize;
    let mut step = None;
    let mut out = PathBuf::from("out");
    let mut input = None;
    let mut seed = 0u64;
    let mut probes = 100usize;

    for (k, v) in &entries {
        match k.as_str() {
            "mode" => mode = Some(v.parse::<Mode>()?),
            "dim" => dim = parse_num(k, v)?,
            "res" => res = parse_num(k, v)?,
            "preset" => preset = v.parse()?,
            "q" => q = Some(parse_num::<f64>(k, v)?),
            "q_start" => q_start = Some(parse_num::<f64>(k, v)?),
            "q_end" => q_end = Some(parse_num::<f64>(k, v)?),
            "q_steps" => q_steps = Some(parse_num::<usize>(k, v)?),
            "schedule" => {
                explicit = Some(
                    v.split(',')
                        .map(|s| parse_num::<f64>(k, s.trim()))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "tol" => tol = positive(k, parse_num(k, v)?)?,
            "max_iters" => max_iters = parse_num(k, v)?,
            "step" => step = Some(positive(k, parse_num(k, v)?)?),
            "out" => out = PathBuf::from(v),
            "input" => input = Some(PathBuf::from(v)),
            "seed" => seed = parse_num(k, v)?,
            "probes" => probes = parse_num(k, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
    }

    let mode = mode.ok_or_else(|| Error::Config("mode required".into()))?;
    if dim < 3 {
        return Err(Error::Config(format!("dim must be >= 3, got {dim}")));
    }
    if res < 4 || !res.is_multiple_of(2) {
        return Err(Error::Config(format!("res must be even and >= 4, got {res}")));
    }
    if max_iters == 0 {
        return Err(Error::Config("max_iters must be positive".into()));
    }
    let ts = critical_exponent(dim);
    let in_range = |key: &str, q: f64| -> Result<f64> {
        if q > 2.0 && q < ts {
            Ok(q)
        } else {
            Err(Error::Config(format!("{key} = {q} outside (2, {ts})")))
        }
    };
    if let Some(v) = q {
        in_range("q", v)?;
    }
    let schedule = match (explicit, q_start, q_end) {
        (Some(v), None, None) => Schedule::Explicit(v),
        (Some(_), _, _) => {
            return Err(Error::Config("schedule conflicts with q_start/q_end".into()));
        }
        (None, Some(start), Some(end)) => Schedule::Linear {
            start,
            end,
            steps: q_steps.unwrap_or(5),
        },
        (None, None, None) => Schedule::Default {
            steps: q_steps.unwrap_or(5),
        },
        _ => return Err(Error::Config("q_start and q_end must be given together".into())),
    };
    let exps = schedule.exponents(dim).map_err(|e| Error::Config(e.to_string()))?;
    if exps.is_empty() {
        return Err(Error::Config("schedule is empty".into()));
    }
    for &e in &exps {
        in_range("schedule entry", e)?;
    }
    if exps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("schedule must be strictly increasing".into()));
    }

    Ok(RunConfig {
        mode,
        dim,
        res,
        preset,
        q,
        schedule,
        tol,
        max_iters,
        step,
        out,
        input,
        seed,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flags_override_file() {
        let c = parse_config(&kv(&[("res", "16")]), Some("mode = solve\nres = 32\n")).unwrap();
        assert_eq!(c.res, 16);
        assert_eq!(c.mode, Mode::Solve);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config(&[], Some("mode = solve\nrez = 32")).unwrap_err();
        assert!(e.to_string().contains("rez"), "{e}");
    }

    #[test]
    fn empty_config_needs_mode() {
        let e = parse_config(&[], Some("")).unwrap_err();
        assert!(e.to_string().contains("mode required"), "{e}");
    }

    #[test]
    fn comments_and_dashes() {
        let c = parse_config(
            &kv(&[("--max-iters", "10")]),
            Some("# header\nmode = continue # trailing\nschedule = 3, 4, 5, 5.5, 5.8\n"),
        )
        .unwrap();
        assert_eq!(c.max_iters, 10);
        assert_eq!(c.schedule.exponents(3).unwrap(), vec![3.0, 4.0, 5.0, 5.5, 5.8]);
    }

    #[test]
    fn out_of_range_values() {
        assert!(parse_config(&kv(&[("mode", "solve"), ("q", "6")]), None).is_err());
        assert!(parse_config(&kv(&[("mode", "solve"), ("dim", "2")]), None).is_err());
        assert!(parse_config(&kv(&[("mode", "solve"), ("tol", "-1")]), None).is_err());
        assert!(parse_config(&kv(&[("mode", "continue"), ("schedule", "4,3")]), None).is_err());
        assert!(parse_config(&kv(&[("mode", "fly")]), None).is_err());
    }

    #[test]
    fn linear_schedule() {
        let c = parse_config(
            &kv(&[("mode", "continue"), ("q_start", "3"), ("q_end", "5"), ("q_steps", "3")]),
            None,
        )
        .unwrap();
        assert_eq!(c.schedule.exponents(3).unwrap(), vec![3.0, 4.0, 5.0]);
    }

    #[test]
    fn echo_reparses_to_same_config() {
        let c = parse_config(
            &kv(&[("mode", "continue"), ("schedule", "3,4,5.8"), ("seed", "7"), ("step", "0.001")]),
            None,
        )
        .unwrap();
        let again = parse_config(&[], Some(&c.echo())).unwrap();
        assert_eq!(c, again);
    }
}
