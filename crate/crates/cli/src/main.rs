//! `cubic-orbit`: find, integrate, analyze and stress-test the cubic collision orbit.
//!
//! Exit codes: 0 success, 1 verification failure, 2 numerical failure, 3 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubic_orbit::verify::Faults;

mod commands;
mod config;
mod output;

use config::{ConfigError, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "cubic-orbit", version, about = "Eight-body cubic collision orbit toolkit")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by all subcommands; each overrides the matching config-file key.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// Energy level E (must be negative).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    /// Relative integration tolerance.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Absolute integration tolerance.
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    /// Output file (stdout when omitted; sweep defaults to sweep_summary.csv).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Number of equally spaced sweep angles per axis.
    #[arg(long, global = true)]
    pub grid_angles: Option<usize>,
    /// Comma-separated sweep radii.
    #[arg(long, global = true)]
    pub grid_radii: Option<String>,
    #[arg(long, global = true)]
    pub max_collisions: Option<usize>,
    /// Longest allowed s-gap between axis-1 collisions before a sweep run is abandoned.
    #[arg(long, global = true)]
    pub timeout_span: Option<f64>,
    /// Sweep worker threads (0 = one per core).
    #[arg(long, global = true, env = "CUBIC_ORBIT_WORKERS")]
    pub workers: Option<usize>,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Orbit JSON written by find-orbit; skips the search.
    #[arg(long, global = true)]
    pub orbit: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the shooting problem and report (alpha, beta, tau).
    FindOrbit,
    /// Sample the orbit on a uniform s grid as CSV.
    Trajectory {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        span_start: Option<f64>,
        /// Defaults to one period, 12 tau.
        #[arg(long)]
        span_end: Option<f64>,
    },
    /// Linear stability report as JSON.
    Stability,
    /// Perturbation sweep; writes the summary and per-point CSVs.
    Sweep,
    /// Run the invariant battery.
    Verify {
        #[arg(long, value_enum, hide = true)]
        inject: Vec<Inject>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Inject {
    TransposeSf,
    Hessian,
    WSign,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0} verification check(s) failed")]
    Verify(usize),
    #[error("numerical failure: {0}")]
    Numerical(cubic_orbit::Error),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Failure {
    pub fn other(e: impl std::fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Config(_) => 3,
        }
    }
}

impl From<cubic_orbit::Error> for Failure {
    fn from(e: cubic_orbit::Error) -> Self {
        match e {
            cubic_orbit::Error::InvalidConfig(msg) => Failure::Config(msg),
            other => Failure::Numerical(other),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::resolve(&cli.overrides)?;
    match cli.command {
        Command::FindOrbit => commands::find(&cfg),
        Command::Trajectory {
            samples,
            span_start,
            span_end,
        } => {
            cfg.samples = samples.unwrap_or(cfg.samples);
            cfg.span_start = span_start.unwrap_or(cfg.span_start);
            cfg.span_end = span_end.or(cfg.span_end);
            commands::trajectory(&cfg)
        }
        Command::Stability => commands::stability(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Verify { inject } => {
            let faults = Faults {
                transpose_sf: inject.contains(&Inject::TransposeSf),
                hessian_perturbation: inject.contains(&Inject::Hessian),
                flip_w_sign: inject.contains(&Inject::WSign),
            };
            commands::verify(&cfg, faults)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cubic-orbit: {e}");
            ExitCode::from(e.code())
        }
    }
}
