//! Serialization of orbits, trajectories, stability reports and sweep tables.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use cubic_orbit::dynamics::{gamma_value, PhysicalClock};
use cubic_orbit::{EnergyLevel, OrbitSolution, StabilityReport, SweepRecord, SweepSummaryRow, Trajectory};
use nalgebra::{Complex, Matrix3, Matrix6};
use serde::{Deserialize, Serialize};

/// CSV number format: 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub period_12tau: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub residual: f64,
    pub midpoint_residual: f64,
}

impl From<&OrbitSolution> for OrbitRecord {
    fn from(s: &OrbitSolution) -> Self {
        Self {
            alpha: s.alpha,
            beta: s.beta,
            tau: s.tau,
            period_12tau: s.period(),
            energy: s.energy.value(),
            residual: s.residual,
            midpoint_residual: s.midpoint_residual,
        }
    }
}

impl OrbitRecord {
    pub fn solution(&self) -> OrbitSolution {
        OrbitSolution {
            alpha: self.alpha,
            beta: self.beta,
            tau: self.tau,
            energy: EnergyLevel(self.energy),
            residual: self.residual,
            midpoint_residual: self.midpoint_residual,
        }
    }

    pub fn csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "beta", "tau", "period_12tau", "E", "residual", "midpoint_residual"])?;
        w.write_record(
            [self.alpha, self.beta, self.tau, self.period_12tau, self.energy, self.residual, self.midpoint_residual]
                .map(num),
        )?;
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

pub fn read_orbit(path: &Path) -> anyhow::Result<OrbitSolution> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read orbit {}", path.display()))?;
    let rec: OrbitRecord =
        serde_json::from_str(&text).with_context(|| format!("malformed orbit JSON in {}", path.display()))?;
    Ok(rec.solution())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for ComplexJson {
    fn from(z: Complex<f64>) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityJson {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    pub lambda1: ComplexJson,
    pub lambda2: ComplexJson,
    pub block_residual: f64,
    pub k_row_residual: f64,
    pub verdict: String,
    pub monodromy_spectrum: Vec<ComplexJson>,
    pub monodromy_modulus_defect: f64,
    pub monodromy_unit_pair_defect: f64,
}

fn rows6(m: &Matrix6<f64>) -> Vec<Vec<f64>> {
    (0..6).map(|i| (0..6).map(|j| m[(i, j)]).collect()).collect()
}

fn rows3(m: &Matrix3<f64>) -> Vec<Vec<f64>> {
    (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect()
}

impl From<&StabilityReport> for StabilityJson {
    fn from(r: &StabilityReport) -> Self {
        Self {
            w: rows6(&r.w),
            k: rows3(&r.k),
            lambda1: r.lambda1.into(),
            lambda2: r.lambda2.into(),
            block_residual: r.block_residual,
            k_row_residual: r.k_row_residual,
            verdict: r.verdict.as_str().to_string(),
            monodromy_spectrum: r.monodromy_spectrum().iter().map(|&z| z.into()).collect(),
            monodromy_modulus_defect: r.monodromy.modulus_defect,
            monodromy_unit_pair_defect: r.monodromy.unit_pair_defect,
        }
    }
}

pub const TRAJECTORY_HEADER: [&str; 9] = ["s", "Q1", "Q2", "Q3", "P1", "P2", "P3", "t_physical", "Gamma"];

pub fn trajectory_csv<W: Write>(out: W, traj: &Trajectory, energy: EnergyLevel, grid: &[f64]) -> anyhow::Result<()> {
    let clock = PhysicalClock::new(traj);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for &s in grid {
        let y = traj
            .interpolate(s)
            .with_context(|| format!("s = {s} outside the integrated span"))?;
        let t = clock.at(s).unwrap_or(f64::NAN);
        let mut row: Vec<String> = vec![num(s)];
        row.extend(y.iter().map(|&v| num(v)));
        row.push(num(t));
        row.push(num(gamma_value(&y, energy)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_csv<W: Write>(out: W, rows: &[SweepSummaryRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "all_reached", "dist_max", "n_early"])?;
    for row in rows {
        w.write_record([num(row.r), row.all_reached.to_string(), num(row.dist_max), row.n_early.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_csv<W: Write>(out: W, records: &[SweepRecord]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["a", "b", "c", "r", "collisions", "max_distance", "early"])?;
    for rec in records {
        w.write_record([
            num(rec.a),
            num(rec.b),
            num(rec.c),
            num(rec.r),
            rec.collisions_reached.to_string(),
            num(rec.max_distance),
            rec.terminated_early.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable summary table for standard output.
pub fn summary_table(rows: &[SweepSummaryRow]) -> String {
    let mut s = format!("{:>8} {:>12} {:>10} {:>8}\n", "r", "all_reached", "dist_max", "n_early");
    for row in rows {
        s += &format!("{:>8.3} {:>12} {:>10.4} {:>8}\n", row.r, row.all_reached, row.dist_max, row.n_early);
    }
    s
}

/// `sweep_summary.csv` → `sweep_summary_records.csv`.
pub fn records_path(summary: &Path) -> std::path::PathBuf {
    let stem = summary.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let ext = summary.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    summary.with_file_name(format!("{stem}_records.{ext}"))
}
