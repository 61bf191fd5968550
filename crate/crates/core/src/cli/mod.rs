//! Batch runs: presets, configuration, and on-disk artifacts.
//!
//! Every run owns its output directory. Artifacts are deterministic for a
//! fixed configuration and seed. A `manifest.txt` echoes the configuration and
//! lists SHA-256 checksums; a `.failed` marker flags runs that errored or
//! violated a hard postcondition.

mod config;
mod preset;

pub use config::{parse_config, parse_file, Mode, RunConfig, Schedule, KEYS};
pub use preset::Preset;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::blowup::{self, BlowupConfig, BlowupReport};
use crate::error::{Error, Result};
use crate::functionals::{self, lambda_upper_bound, sharp_constants};
use crate::green::{self, GreenContext};
use crate::snapshot;
use crate::subcritical::{self, continuation, minimize, SolverConfig, SubcriticalSolution};
use crate::torus::{ScalarField, TorusGrid};
use crate::verify;

/// Constraint tolerance for hard postconditions.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Relative multiplier-identity tolerance for hard postconditions.
pub const MULTIPLIER_TOL: f64 = 1e-8;
/// Green defining-equation tolerance for hard postconditions.
pub const GREEN_TOL: f64 = 1e-10;

pub const FAILED_MARKER: &str = ".failed";
pub const MANIFEST: &str = "manifest.txt";
pub const SNAPSHOT_INDEX: &str = "snapshots.csv";

/// Artifacts written and postconditions evaluated by one run.
#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    /// Artifact file names relative to the output directory, in write order.
    pub artifacts: Vec<String>,
    /// Violated hard postconditions.
    pub hard_failures: Vec<String>,
    /// Soft findings, reported but never failing the run.
    pub findings: Vec<String>,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        self.hard_failures.is_empty()
    }

    fn hard(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.hard_failures.push(msg());
        }
    }

    fn soft(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.findings.push(msg());
        }
    }
}

struct Output {
    dir: PathBuf,
    outcome: RunOutcome,
}

impl Output {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.outcome.artifacts.push(name.to_string());
        Ok(())
    }

    fn snapshot(&mut self, name: &str, u: &ScalarField) -> Result<()> {
        self.write(name, &snapshot::encode(u))
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip binary64.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), fmt_real)
}

fn fmt_flag(v: Option<bool>) -> String {
    match v {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => "NaN".into(),
    }
}

fn csv(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s.into_bytes()
}

fn x_max_header(n: usize) -> Vec<String> {
    (0..n).map(|a| format!("x_max_i{a}")).collect()
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        step: cfg.step,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        ..SolverConfig::default()
    }
}

/// Runs one configuration and writes its artifacts under `cfg.out`.
///
/// Errors leave a `.failed` marker and a manifest of what was written.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&cfg.out)?;
    let marker = cfg.out.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let mut out = Output {
        dir: cfg.out.clone(),
        outcome: RunOutcome::default(),
    };
    let result = match cfg.mode {
        Mode::Solve => run_solve(cfg, &mut out),
        Mode::Continue => run_continue(cfg, &mut out),
        Mode::Verify => run_verify(cfg, &mut out),
        Mode::Report => run_report(cfg, &mut out),
    };
    write_manifest(cfg, &out)?;
    match result {
        Ok(()) => {
            if !out.outcome.success() {
                fs::write(&marker, out.outcome.hard_failures.join("\n") + "\n")?;
            }
            Ok(out.outcome)
        }
        Err(e) => {
            fs::write(&marker, format!("{e}\n"))?;
            Err(e)
        }
    }
}

fn write_manifest(cfg: &RunConfig, out: &Output) -> Result<()> {
    let mut s = String::from("# config\n");
    s.push_str(&cfg.echo());
    s.push_str("# artifacts\n");
    for name in &out.outcome.artifacts {
        let bytes = fs::read(out.dir.join(name))?;
        let _ = writeln!(s, "{}  {}", hex::encode(Sha256::digest(&bytes)), name);
    }
    fs::write(out.dir.join(MANIFEST), s)?;
    Ok(())
}

fn setup(cfg: &RunConfig) -> Result<(TorusGrid, ScalarField)> {
    let grid = TorusGrid::new(cfg.dim, cfg.res)?;
    let f = cfg.preset.field(&grid)?;
    Ok((grid, f))
}

fn check_solution(out: &mut RunOutcome, sol: &SubcriticalSolution, f: &ScalarField, tol: f64) -> Result<()> {
    let q = sol.q;
    let c = functionals::constraint_value(f, &sol.u, q)?;
    out.hard((c - 1.0).abs() <= CONSTRAINT_TOL, || format!("q={q}: constraint {c} differs from 1"));
    let m = subcritical::multiplier_residual(sol, f)?;
    out.hard(m <= MULTIPLIER_TOL, || format!("q={q}: multiplier identity residual {m}"));
    out.hard(sol.lam > 0.0, || format!("q={q}: multiplier {} not positive", sol.lam));
    out.hard(sol.el_residual <= tol, || {
        format!("q={q}: Euler-Lagrange residual {} above {tol}", sol.el_residual)
    });
    out.hard(sol.u.min() >= 0.0, || format!("q={q}: negative minimizer value"));
    Ok(())
}

fn run_solve(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let (grid, f) = setup(cfg)?;
    let q = cfg.solve_exponent();
    let sol = minimize(&f, q, &solver_config(cfg))?;
    check_solution(&mut out.outcome, &sol, &f, cfg.tol)?;
    let consts = sharp_constants(grid.dim())?;
    let bound = lambda_upper_bound(&f, &consts)?;
    let constraint = functionals::constraint_value(&f, &sol.u, q)?;
    let multiplier = subcritical::multiplier_residual(&sol, &f)?;
    let probes = if cfg.probes > 0 {
        Some(subcritical::sample_minimality(&f, &sol, cfg.probes, cfg.seed)?)
    } else {
        None
    };
    let probe_min = probes.as_ref().map(|p| p.min_value());
    if let Some(pm) = probe_min {
        out.outcome
            .soft(sol.lam <= pm, || format!("probe Rayleigh minimum {pm} below lambda {}", sol.lam));
    }

    let mut header: Vec<String> = ["q", "lambda", "energy", "el_residual", "constraint", "multiplier_residual", "u_max"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(x_max_header(grid.dim()));
    header.extend(["iters", "probe_count", "probe_min", "bound"].iter().map(|s| s.to_string()));
    let mut row = vec![
        fmt_real(q),
        fmt_real(sol.lam),
        fmt_real(sol.energy),
        fmt_real(sol.el_residual),
        fmt_real(constraint),
        fmt_real(multiplier),
        fmt_real(sol.u_max),
    ];
    row.extend(sol.x_max.index.iter().map(|i| i.to_string()));
    row.extend([
        sol.iters.to_string(),
        probes.as_ref().map_or(0, |p| p.values.len()).to_string(),
        fmt_opt(probe_min),
        fmt_real(bound),
    ]);
    out.snapshot("u.pscf", &sol.u)?;
    out.write("summary.csv", &csv(&header, &[row]))?;
    write_index(out, &[("u.pscf".to_string(), q)])?;
    Ok(())
}

fn write_index(out: &mut Output, entries: &[(String, f64)]) -> Result<()> {
    let rows: Vec<Vec<String>> = entries.iter().map(|(n, q)| vec![n.clone(), fmt_real(*q)]).collect();
    out.write(SNAPSHOT_INDEX, &csv(&["file".into(), "q".into()], &rows))
}

fn blowup_row(r: &BlowupReport) -> Vec<String> {
    vec![
        fmt_real(r.q),
        fmt_opt(r.mu_q),
        fmt_opt(r.profile_sup_err),
        fmt_real(r.w_max),
        fmt_opt(r.w_tail),
        fmt_opt(r.eta_q),
        fmt_real(r.a_est),
        fmt_flag(r.envelope_ok),
        fmt_opt(r.c_eps),
        fmt_opt(r.expansion_residual),
    ]
}

fn blowup_header() -> Vec<String> {
    [
        "q", "mu_q", "profile_sup_err", "w_max", "w_tail", "eta_q", "A_est", "envelope_ok", "C_eps",
        "expansion_residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn blowup_findings(out: &mut RunOutcome, r: &BlowupReport) {
    out.soft(!r.under_resolved, || {
        format!("q={}: concentration scale under-resolved (mu*res <= 1)", r.q)
    });
    out.soft(r.envelope_ok != Some(false), || format!("q={}: envelope check failed", r.q));
}

fn run_continue(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let (grid, f) = setup(cfg)?;
    let schedule = cfg.schedule.exponents(cfg.dim)?;
    let trace = continuation(&f, &schedule, &solver_config(cfg))?;
    let ctx = GreenContext::new(&grid)?;
    let bcfg = BlowupConfig::default();

    let mut header: Vec<String> = vec!["q".into(), "lambda".into(), "u_max".into()];
    header.extend(x_max_header(grid.dim()));
    header.extend(["mu_q", "eta_q", "el_residual"].iter().map(|s| s.to_string()));
    let mut trace_rows = Vec::new();
    let mut blow_rows = Vec::new();
    let mut index = Vec::new();
    for (k, (e, sol)) in trace.entries.iter().zip(&trace.solutions).enumerate() {
        check_solution(&mut out.outcome, sol, &f, cfg.tol)?;
        let mut row = vec![fmt_real(e.q), fmt_real(e.lam), fmt_real(e.u_max)];
        row.extend(e.x_max.index.iter().map(|i| i.to_string()));
        row.extend([fmt_opt(e.mu_q), fmt_opt(e.eta_q), fmt_real(e.el_residual)]);
        trace_rows.push(row);

        let report = blowup::analyze(sol, &f, &ctx, &bcfg);
        blowup_findings(&mut out.outcome, &report);
        blow_rows.push(blowup_row(&report));

        let name = format!("u_{k:03}.pscf");
        out.snapshot(&name, &sol.u)?;
        index.push((name, e.q));
    }
    let last = trace.entries.last().map_or(0.0, |e| e.lam);
    out.outcome.soft(last <= trace.bound, || {
        format!("final lambda {last} above the sharp bound {}", trace.bound)
    });
    out.write("trace.csv", &csv(&header, &trace_rows))?;
    out.write("blowup.csv", &csv(&blowup_header(), &blow_rows))?;
    write_index(out, &index)?;
    Ok(())
}

fn run_verify(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let suite = verify::identity_suite()?;
    let rows: Vec<Vec<String>> = suite
        .iter()
        .map(|o| {
            vec![
                o.name.clone(),
                fmt_real(o.measured),
                fmt_real(o.expected),
                fmt_real(o.tolerance),
                if o.pass { "1".into() } else { "0".into() },
            ]
        })
        .collect();
    for o in &suite {
        out.outcome.hard(o.pass, || {
            format!("{}: measured {} expected {} tolerance {}", o.name, o.measured, o.expected, o.tolerance)
        });
    }
    let header: Vec<String> = ["name", "measured", "expected", "tolerance", "pass"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.write("verify.csv", &csv(&header, &rows))?;

    let c = sharp_constants(cfg.dim)?;
    let (_, f) = setup(cfg)?;
    let bound = lambda_upper_bound(&f, &c)?;
    let header: Vec<String> = ["n", "omega_n", "omega_n_minus_1", "k_n_2_sq", "bubble_mass", "two_star", "lambda_bound"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let row = vec![
        c.n.to_string(),
        fmt_real(c.omega_n),
        fmt_real(c.omega_n_minus_1),
        fmt_real(c.k_n_2_sq),
        fmt_real(c.bubble_mass),
        fmt_real(c.two_star),
        fmt_real(bound),
    ];
    out.write("constants.csv", &csv(&header, &[row]))?;
    Ok(())
}

/// Reads `snapshots.csv` from `dir` as `(file, q)` pairs.
pub fn read_index(dir: &Path) -> Result<Vec<(String, f64)>> {
    let text = fs::read_to_string(dir.join(SNAPSHOT_INDEX))?;
    let mut lines = text.lines();
    if lines.next() != Some("file,q") {
        return Err(Error::Config(format!("{}: bad header", SNAPSHOT_INDEX)));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (name, q) = l
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("{SNAPSHOT_INDEX}: bad row `{l}`")))?;
            let q = q
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{SNAPSHOT_INDEX}: bad exponent `{q}`: {e}")))?;
            if name.contains('/') || name.contains('\\') {
                return Err(Error::Config(format!("{SNAPSHOT_INDEX}: file `{name}` must be a bare name")));
            }
            Ok((name.to_string(), q))
        })
        .collect()
}

fn run_report(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let (grid, f) = setup(cfg)?;
    let input = cfg.input_dir();
    let index = read_index(&input)?;
    let ctx = GreenContext::new(&grid)?;
    let bcfg = BlowupConfig::default();
    let mut header: Vec<String> = vec![
        "file".into(),
        "lambda".into(),
        "el_residual".into(),
        "representation_residual".into(),
        "green_equation_residual".into(),
    ];
    header.extend(blowup_header());
    let mut rows = Vec::new();
    for (name, q) in index {
        let raw = snapshot::read_file(input.join(&name))?;
        if raw.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        let u = functionals::normalize_to_constraint(&f, &raw, q)?;
        let lam = functionals::rayleigh_value(&f, &u, q)?;
        let sol = SubcriticalSolution::from_field(u, q, lam, &f)?;
        let rep = green::representation_check(&ctx, &sol, &f, &green::default_samples(&sol))?;
        let geq = green::column_equation_residual(&ctx, sol.x_max_flat());
        out.outcome
            .hard(geq <= GREEN_TOL, || format!("{name}: Green defining equation residual {geq}"));
        out.outcome.soft(sol.el_residual <= cfg.tol, || {
            format!("{name}: stored field has Euler-Lagrange residual {}", sol.el_residual)
        });
        let report = blowup::analyze(&sol, &f, &ctx, &bcfg);
        blowup_findings(&mut out.outcome, &report);
        let mut row = vec![name, fmt_real(lam), fmt_real(sol.el_residual), fmt_real(rep), fmt_real(geq)];
        row.extend(blowup_row(&report));
        rows.push(row);
    }
    out.write("report.csv", &csv(&header, &rows))?;
    Ok(())
}
