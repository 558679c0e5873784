//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cubic_orbit::sweep::{angle_grid, default_integrator};
use cubic_orbit::{EnergyLevel, IntegratorConfig, SearchConfig, SweepConfig};

use crate::Overrides;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(ConfigError(format!("unknown format `{other}` (json or csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub energy: EnergyLevel,
    pub integrator: IntegratorConfig,
    pub sweep_integrator: IntegratorConfig,
    pub search: SearchConfig,
    pub sweep: SweepConfig,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<Format>,
    pub orbit_path: Option<PathBuf>,
    pub samples: usize,
    pub span_start: f64,
    pub span_end: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            energy: EnergyLevel::default(),
            integrator: IntegratorConfig::default(),
            sweep_integrator: default_integrator(),
            search: SearchConfig::default(),
            sweep: SweepConfig::default(),
            output_path: None,
            output_format: None,
            orbit_path: None,
            samples: 1000,
            span_start: 0.0,
            span_end: None,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(ConfigError(format!("config line {}: empty key", n + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError(format!("bad value `{v}` for `{key}`")))
}

pub fn parse_radii(v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse::<f64>("grid_radii", s))
        .collect()
}

impl RunConfig {
    fn set_energy(&mut self, e: f64) {
        self.energy = EnergyLevel(e);
    }

    fn set_tolerance(&mut self, rtol: Option<f64>, atol: Option<f64>) {
        for cfg in [&mut self.integrator, &mut self.sweep_integrator] {
            if let Some(r) = rtol {
                cfg.rtol = r;
            }
            if let Some(a) = atol {
                cfg.atol = a;
            }
        }
    }

    fn set_angles(&mut self, n: usize) {
        self.sweep = std::mem::take(&mut self.sweep).with_angles(angle_grid(n));
    }

    fn apply_key(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "energy" => self.set_energy(parse(key, v)?),
            "rtol" => self.set_tolerance(Some(parse(key, v)?), None),
            "atol" => self.set_tolerance(None, Some(parse(key, v)?)),
            "max_steps" => {
                let n: usize = parse(key, v)?;
                self.integrator.max_steps = n;
                self.sweep_integrator.max_steps = n;
            }
            "out" => self.output_path = Some(PathBuf::from(v)),
            "format" => self.output_format = Some(v.parse()?),
            "orbit" => self.orbit_path = Some(PathBuf::from(v)),
            "grid_angles" => self.set_angles(parse(key, v)?),
            "grid_radii" => self.sweep.r_grid = parse_radii(v)?,
            "max_collisions" => self.sweep.max_collisions = parse(key, v)?,
            "timeout_span" => self.sweep.timeout_span = parse(key, v)?,
            "workers" => self.sweep.parallelism = parse(key, v)?,
            "samples" => self.samples = parse(key, v)?,
            "span_start" => self.span_start = parse(key, v)?,
            "span_end" => self.span_end = Some(parse(key, v)?),
            "search_tolerance" => self.search.tolerance = parse(key, v)?,
            "refine_starts" => self.search.refine_starts = parse(key, v)?,
            "max_iterations" => self.search.max_iterations = parse(key, v)?,
            other => return Err(ConfigError(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (k, v) in parse_file_text(&text)? {
            cfg.apply_key(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Defaults, then the config file named in `ov`, then the remaining flags.
    pub fn resolve(ov: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match &ov.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(e) = ov.energy {
            cfg.set_energy(e);
        }
        cfg.set_tolerance(ov.rtol, ov.atol);
        if let Some(p) = &ov.out {
            cfg.output_path = Some(p.clone());
        }
        if let Some(p) = &ov.orbit {
            cfg.orbit_path = Some(p.clone());
        }
        if let Some(f) = ov.format {
            cfg.output_format = Some(f);
        }
        if let Some(n) = ov.grid_angles {
            cfg.set_angles(n);
        }
        if let Some(r) = &ov.grid_radii {
            cfg.sweep.r_grid = parse_radii(r)?;
        }
        if let Some(n) = ov.max_collisions {
            cfg.sweep.max_collisions = n;
        }
        if let Some(t) = ov.timeout_span {
            cfg.sweep.timeout_span = t;
        }
        if let Some(w) = ov.workers {
            cfg.sweep.parallelism = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |e: cubic_orbit::Error| ConfigError(e.to_string());
        if !self.energy.value().is_finite() {
            return Err(ConfigError("energy must be finite".into()));
        }
        self.integrator.validate().map_err(wrap)?;
        self.sweep_integrator.validate().map_err(wrap)?;
        self.search.validate().map_err(wrap)?;
        self.sweep.validate().map_err(wrap)?;
        Ok(())
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.output_format.unwrap_or(default)
    }
}
