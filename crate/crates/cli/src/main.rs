//! `irlink`: run pendulum and infrared-link experiments from a config file.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irlink_core::{Error, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "irlink", version, about = "Pendulum-stabilized infrared audio link simulator")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Config file (`section.key = value` lines). Built-in defaults if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Upper bound on scenarios evaluated in parallel.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// `KEY=VALUE` override; repeatable, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    /// One scenario: time series, received audio and both reports.
    Simulate,
    /// Set-angle sweep of the pendulum.
    SweepStability,
    /// Closed-loop stability over a (kp, kd) grid.
    StabilityMap,
    /// Receiver band-pass response and group delay.
    FilterResponse,
    /// Every vibration profile with the controller on and off.
    LinkTest,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::SweepStability => "sweep-stability",
            Verb::StabilityMap => "stability-map",
            Verb::FilterResponse => "filter-response",
            Verb::LinkTest => "link-test",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: {}", path.display(), strip_kind(&e))))?;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)
            .map_err(|e| Error::InvalidInput(format!("--set: {}", strip_kind(&e))))?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::InvalidInput(m)
        | Error::NumericFailure(m)
        | Error::InvalidDesign(m)
        | Error::MetricUndefined(m)
        | Error::Io(m) => m.clone(),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericFailure(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(2);
    }
    let result = load_config(&cli).and_then(|cfg| commands::execute(cli.verb, &cfg, &cli.out, jobs));
    match result {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
