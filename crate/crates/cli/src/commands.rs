//! Subcommand implementations.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use cubic_orbit::integrator::{integrate, uniform_grid};
use cubic_orbit::shooting::find_orbit;
use cubic_orbit::stability::analyze;
use cubic_orbit::sweep::run_sweep;
use cubic_orbit::verify::{all_passed, run_battery, Faults, VerifyConfig};
use cubic_orbit::OrbitSolution;

use crate::config::{ConfigError, Format, RunConfig};
use crate::output::{self, OrbitRecord, StabilityJson};
use crate::Failure;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// Writes `text` to the configured output path, or to stdout.
fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.output_path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::Config(e.to_string()))
        }
    }
}

/// Loads the orbit from `--orbit` if given, else solves for it.
pub fn obtain_orbit(cfg: &RunConfig) -> Result<OrbitSolution, Failure> {
    match &cfg.orbit_path {
        Some(p) => output::read_orbit(p).map_err(|e| Failure::Config(format!("{e:#}"))),
        None => Ok(find_orbit(cfg.energy, &cfg.search, &cfg.integrator)?),
    }
}

pub fn find(cfg: &RunConfig) -> Result<(), Failure> {
    let sol = obtain_orbit(cfg)?;
    let rec = OrbitRecord::from(&sol);
    let text = match cfg.format_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&rec).map_err(Failure::other)? + "\n",
        Format::Csv => rec.csv().map_err(Failure::other)?,
    };
    emit(cfg, &text)
}

pub fn trajectory(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.format_or(Format::Csv) != Format::Csv {
        return Err(ConfigError("trajectory output is CSV only".into()).into());
    }
    if cfg.samples < 2 {
        return Err(ConfigError(format!("need at least 2 samples (got {})", cfg.samples)).into());
    }
    let sol = obtain_orbit(cfg)?;
    let (a, b) = (cfg.span_start, cfg.span_end.unwrap_or_else(|| sol.period()));
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
        return Err(ConfigError(format!("bad span [{a}, {b}]: need 0 <= start < end")).into());
    }
    let traj = integrate(sol.initial_state(), sol.energy, (0.0, b), &cfg.integrator)?;
    let grid = uniform_grid(a, b, cfg.samples);
    let result = match &cfg.output_path {
        Some(p) => output::trajectory_csv(create(p)?, &traj, sol.energy, &grid),
        None => output::trajectory_csv(io::stdout().lock(), &traj, sol.energy, &grid),
    };
    result.map_err(Failure::other)
}

pub fn stability(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.format_or(Format::Json) != Format::Json {
        return Err(ConfigError("stability output is JSON only".into()).into());
    }
    let sol = obtain_orbit(cfg)?;
    let report = analyze(&sol, &cfg.integrator)?;
    let text = serde_json::to_string_pretty(&StabilityJson::from(&report)).map_err(Failure::other)? + "\n";
    emit(cfg, &text)
}

pub fn sweep(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.format_or(Format::Csv) != Format::Csv {
        return Err(ConfigError("sweep output is CSV only".into()).into());
    }
    let sol = obtain_orbit(cfg)?;
    let outcome = run_sweep(&sol, &cfg.sweep, &cfg.sweep_integrator)?;
    let summary_path = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from("sweep_summary.csv"));
    let records_path = output::records_path(&summary_path);
    output::summary_csv(create(&summary_path)?, &outcome.summary).map_err(Failure::other)?;
    output::records_csv(create(&records_path)?, &outcome.records).map_err(Failure::other)?;
    print!("{}", output::summary_table(&outcome.summary));
    println!("summary: {}", summary_path.display());
    println!("records: {}", records_path.display());
    Ok(())
}

pub fn verify(cfg: &RunConfig, faults: Faults) -> Result<(), Failure> {
    let sol = obtain_orbit(cfg)?;
    let checks = run_battery(&sol, &cfg.integrator, &VerifyConfig::default(), faults)?;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {:.3e} <= {:.1e}", c.name, c.value, c.threshold);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if all_passed(&checks) {
        Ok(())
    } else {
        Err(Failure::Verify(failed))
    }
}
