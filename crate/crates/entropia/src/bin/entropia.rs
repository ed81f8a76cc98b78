//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 all verdicts pass, 1 a verdict failed or the run was cut
//! short or a runtime error occurred, 2 the configuration was invalid.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use entropia::config::{ExperimentConfig, Task, parse_config};
use entropia::error::Error;
use entropia::harness::run;

#[derive(Parser, Debug)]
#[command(
    name = "entropia",
    version,
    about = "Scale entropy, local entropy, and analytic bound experiments"
)]
struct Cli {
    /// Task: entropy, local-entropy, bound-curve, verify-theorem,
    /// verify-corollary, certify-envelopes, schedule-report
    task: String,

    /// Base config file (key = value under [experiment]); flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// System name, e.g. doubling, cat, rotation:0.618, suspend:doubling:1.25
    #[arg(long)]
    system: Option<String>,

    /// Comma-separated strictly decreasing scale ladder
    #[arg(long)]
    eps: Option<String>,

    /// Dyadic grid exponent (step 2^-g)
    #[arg(long)]
    grid_g: Option<u32>,

    /// Fit window "a,b" over time depths n
    #[arg(long)]
    window: Option<String>,

    /// Proxy depth for infinite Bowen balls
    #[arg(long)]
    n_proxy: Option<usize>,

    /// Number of sampled centers for local-entropy tasks
    #[arg(long)]
    centers: Option<usize>,

    /// Wall-clock budget in seconds (also via ENTROPIA_BUDGET_SECONDS)
    #[arg(long)]
    budget_seconds: Option<f64>,

    /// RNG seed for center sampling
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for CSVs, config snapshot, and verdicts
    #[arg(long)]
    out: Option<PathBuf>,

    /// Rayon worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    cfg.task = cli.task.parse::<Task>()?;
    if let Some(s) = &cli.system {
        cfg.system = s.clone();
    }
    if let Some(list) = &cli.eps {
        let mut ladder = Vec::new();
        for part in list.split(',') {
            ladder.push(
                part.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("eps: {e}")))?,
            );
        }
        cfg.eps_ladder = ladder;
    }
    if let Some(g) = cli.grid_g {
        cfg.grid_g = g;
    }
    if let Some(w) = &cli.window {
        let (a, b) = w
            .split_once(',')
            .ok_or_else(|| Error::Config("window: expected 'a,b'".into()))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("window: {e}")))
        };
        cfg.window = (parse(a)?, parse(b)?);
    }
    if let Some(n) = cli.n_proxy {
        cfg.n_proxy = n;
    }
    if let Some(c) = cli.centers {
        cfg.centers = c;
    }
    if let Some(b) = cli.budget_seconds {
        cfg.budget_seconds = Some(b);
    } else if let Ok(raw) = std::env::var("ENTROPIA_BUDGET_SECONDS") {
        let b = raw
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("ENTROPIA_BUDGET_SECONDS: {e}")))?;
        cfg.budget_seconds = Some(b);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(dir) = &cli.out {
        cfg.output_dir = Some(dir.clone());
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(record) => {
            for v in &record.verdicts {
                println!(
                    "{} {} {}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    v.detail
                );
            }
            if record.partial {
                println!("PARTIAL budget exhausted after {:.1}s", record.wall_seconds);
            }
            if let Some(dir) = &cfg.output_dir {
                println!("wrote {}", dir.display());
            }
            if record.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config(_)) | Err(e @ Error::UnknownSystem(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
