use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nullcurv::cli::{self, parse_config};

/// Prescribed scalar curvature in the null case on the flat torus.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// solve, continue, verify or report.
    mode: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    res: Option<usize>,
    /// cosgap:c, bumpneg:a,w or twopeak:c.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    q_start: Option<f64>,
    #[arg(long)]
    q_end: Option<f64>,
    #[arg(long)]
    q_steps: Option<usize>,
    /// Comma-separated exponents for `continue`.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot directory for `report`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    probes: Option<usize>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Args {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut push = |k: &str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k.to_string(), val));
            }
        };
        push("mode", self.mode.clone());
        push("dim", self.dim.map(|x| x.to_string()));
        push("res", self.res.map(|x| x.to_string()));
        push("preset", self.preset.clone());
        push("q", self.q.map(|x| format!("{x:?}")));
        push("q_start", self.q_start.map(|x| format!("{x:?}")));
        push("q_end", self.q_end.map(|x| format!("{x:?}")));
        push("q_steps", self.q_steps.map(|x| x.to_string()));
        push("schedule", self.schedule.clone());
        push("tol", self.tol.map(|x| format!("{x:?}")));
        push("max_iters", self.max_iters.map(|x| x.to_string()));
        push("step", self.step.map(|x| format!("{x:?}")));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("input", self.input.as_ref().map(|p| p.display().to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        push("probes", self.probes.map(|x| x.to_string()));
        v
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let file = match &args.config {
        Some(p) => match fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let cfg = match parse_config(&args.pairs(), file.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match cli::run(&cfg) {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                println!("wrote {}", cfg.out.join(a).display());
            }
            for f in &outcome.findings {
                println!("finding: {f}");
            }
            for h in &outcome.hard_failures {
                eprintln!("FAILED: {h}");
            }
            if outcome.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let mut msg = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                msg.push_str(&format!(": {s}"));
                src = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
