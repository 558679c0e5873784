//! Perturbation sweep around the periodic orbit.
//!
//! Each grid point perturbs `γ(0)` on a sphere of radius `r` in the four free
//! coordinates `(Q₂, Q₃, P₂, P₃)`, then counts `Q₁ = 0` collisions and tracks the
//! distance from `±γ(0)` at each of them.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dynamics::RegularizedState;
use crate::error::{Error, Result};
use crate::integrator::{crossings, IntegratorConfig, RegularizedFlow, Stepper};
use crate::shooting::OrbitSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub a_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub max_collisions: usize,
    /// Longest allowed gap in `s` between consecutive `Q₁ = 0` events.
    pub timeout_span: f64,
    /// Worker threads; 0 uses the rayon default.
    pub parallelism: usize,
}

/// `n` equally spaced angles `2πk/n`, `k = 0..n`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            a_grid: angle_grid(12),
            b_grid: angle_grid(12),
            c_grid: angle_grid(12),
            r_grid: (1..=20).map(|k| 0.005 * k as f64).collect(),
            max_collisions: 200,
            timeout_span: 1.0,
            parallelism: 0,
        }
    }
}

impl SweepConfig {
    /// Same angle grid on all three axes.
    pub fn with_angles(mut self, angles: Vec<f64>) -> Self {
        self.a_grid = angles.clone();
        self.b_grid = angles.clone();
        self.c_grid = angles;
        self
    }

    pub fn with_radii(mut self, radii: Vec<f64>) -> Self {
        self.r_grid = radii;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("a", &self.a_grid), ("b", &self.b_grid), ("c", &self.c_grid)] {
            if g.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} grid is empty")));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} grid has non-finite angles")));
            }
        }
        if self.r_grid.is_empty() {
            return Err(Error::InvalidConfig("radius grid is empty".into()));
        }
        if self.r_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidConfig("radii must be positive and finite".into()));
        }
        if self.max_collisions == 0 {
            return Err(Error::InvalidConfig("max_collisions must be at least 1".into()));
        }
        if !(self.timeout_span.is_finite() && self.timeout_span > 0.0) {
            return Err(Error::InvalidConfig("timeout_span must be positive".into()));
        }
        Ok(())
    }

    /// Grid points sorted by `(r, a, b, c)`.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(
            self.r_grid.len() * self.a_grid.len() * self.b_grid.len() * self.c_grid.len(),
        );
        for &r in &self.r_grid {
            for &a in &self.a_grid {
                for &b in &self.b_grid {
                    for &c in &self.c_grid {
                        out.push(GridPoint { a, b, c, r });
                    }
                }
            }
        }
        out.sort_by(GridPoint::cmp_key);
        out
    }
}

/// Integrator settings used by sweeps unless overridden.
pub fn default_integrator() -> IntegratorConfig {
    IntegratorConfig::with_tolerance(1e-10)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
}

impl GridPoint {
    fn cmp_key(x: &Self, y: &Self) -> std::cmp::Ordering {
        x.r.total_cmp(&y.r)
            .then(x.a.total_cmp(&y.a))
            .then(x.b.total_cmp(&y.b))
            .then(x.c.total_cmp(&y.c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    pub collisions_reached: usize,
    pub max_distance: f64,
    pub terminated_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummaryRow {
    pub r: f64,
    pub all_reached: bool,
    /// Maximum distance over the points that reached `max_collisions`; NaN if none did.
    pub dist_max: f64,
    pub n_early: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SweepSummaryRow>,
}

/// Exchanges the labels 2 and 3 in both `Q` and `P`; a symmetry of Γ.
pub fn swap_23(s: &RegularizedState) -> RegularizedState {
    let mut out = *s;
    out.swap_rows(1, 2);
    out.swap_rows(4, 5);
    out
}

/// `γ(0)` displaced by `r` along the direction given by the angles `(a, b, c)`.
///
/// The angles act in the mirror frame `swap_23(γ(0)) = (0, α, α, √2, β, −β)`:
/// there the state is `(0, α + r cos a cos b, α + r cos a sin b, √2,
/// β + r sin a cos c, −β + r sin a sin c)`, which is then mapped back with
/// [`swap_23`], so `r = 0` gives `γ(0)` and distances to `±γ(0)` are unchanged.
pub fn perturbed_initial(a: f64, b: f64, c: f64, r: f64, sol: &OrbitSolution) -> RegularizedState {
    let mut m = swap_23(&sol.initial_state());
    m[1] += r * a.cos() * b.cos();
    m[2] += r * a.cos() * b.sin();
    m[4] += r * a.sin() * c.cos();
    m[5] += r * a.sin() * c.sin();
    swap_23(&m)
}

/// `min(‖γ − γ₀‖, ‖γ + γ₀‖)`.
pub fn distance_to_orbit(state: &RegularizedState, reference: &RegularizedState) -> f64 {
    (state - reference).norm().min((state + reference).norm())
}

/// Collision count and maximum distance for one initial condition.
pub fn run_one(
    state0: &RegularizedState,
    sol: &OrbitSolution,
    cfg: &SweepConfig,
    icfg: &IntegratorConfig,
) -> (usize, f64, bool) {
    let reference = sol.initial_state();
    let mut count = 0;
    let mut max_d: f64 = 0.0;
    let flow = RegularizedFlow { energy: sol.energy };
    let mut stepper = match Stepper::new(&flow, 0.0, *state0, 1.0, *icfg) {
        Ok(s) => s,
        Err(_) => return (0, 0.0, true),
    };
    let mut last = 0.0;
    let exclusion = 10.0 * f64::EPSILON;
    while count < cfg.max_collisions {
        let deadline = last + cfg.timeout_span;
        if stepper.s() >= deadline {
            return (count, max_d, true);
        }
        let step = match stepper.step_towards(deadline) {
            Ok(step) => step,
            Err(_) => return (count, max_d, true),
        };
        for ev in crossings(&step, &[0], exclusion, icfg.event_tol) {
            if ev.s - last > cfg.timeout_span {
                return (count, max_d, true);
            }
            count += 1;
            last = ev.s;
            max_d = max_d.max(distance_to_orbit(&ev.state, &reference));
            if count == cfg.max_collisions {
                break;
            }
        }
    }
    (count, max_d, false)
}

pub fn run_point(p: GridPoint, sol: &OrbitSolution, cfg: &SweepConfig, icfg: &IntegratorConfig) -> SweepRecord {
    let s0 = perturbed_initial(p.a, p.b, p.c, p.r, sol);
    let (collisions_reached, max_distance, terminated_early) = run_one(&s0, sol, cfg, icfg);
    SweepRecord {
        a: p.a,
        b: p.b,
        c: p.c,
        r: p.r,
        collisions_reached,
        max_distance,
        terminated_early,
    }
}

pub fn summarize(records: &[SweepRecord], r_grid: &[f64]) -> Vec<SweepSummaryRow> {
    let mut radii = r_grid.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
        .into_iter()
        .map(|r| {
            let rows = records.iter().filter(|x| x.r == r);
            let mut n_early = 0;
            let mut dist_max = f64::NAN;
            for x in rows {
                if x.terminated_early {
                    n_early += 1;
                } else {
                    dist_max = if dist_max.is_nan() {
                        x.max_distance
                    } else {
                        dist_max.max(x.max_distance)
                    };
                }
            }
            SweepSummaryRow {
                r,
                all_reached: n_early == 0,
                dist_max,
                n_early,
            }
        })
        .collect()
}

/// Runs the full grid in parallel; records come back sorted by `(r, a, b, c)`.
pub fn run_sweep(sol: &OrbitSolution, cfg: &SweepConfig, icfg: &IntegratorConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    icfg.validate()?;
    if !sol.energy.is_bound() {
        return Err(Error::InvalidConfig("sweep needs a negative energy".into()));
    }
    let points = cfg.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let records: Vec<SweepRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|&p| run_point(p, sol, cfg, icfg))
            .collect()
    });
    let summary = summarize(&records, &cfg.r_grid);
    Ok(SweepOutcome { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::EnergyLevel;

    fn sol() -> OrbitSolution {
        OrbitSolution {
            alpha: 3.1,
            beta: 0.67,
            tau: 0.0104,
            energy: EnergyLevel(-1.0),
            residual: 0.0,
            midpoint_residual: 0.0,
        }
    }

    #[test]
    fn zero_radius_is_unperturbed() {
        let s = sol();
        assert_eq!(perturbed_initial(0.3, 1.1, 2.0, 0.0, &s), s.initial_state());
    }

    #[test]
    fn pure_momentum_direction() {
        let s = sol();
        let p = perturbed_initial(PI / 2.0, 0.7, 0.4, 0.01, &s);
        let d = p - s.initial_state();
        assert!(d[1].abs() < 1e-17 && d[2].abs() < 1e-17);
        assert!((d[5] - 0.01 * 0.4f64.cos()).abs() < 1e-16);
        assert!((d[4] - 0.01 * 0.4f64.sin()).abs() < 1e-16);
    }

    #[test]
    fn mirror_frame_matches_direct_formula() {
        let s = sol();
        let (a, b, c, r): (f64, f64, f64, f64) = (0.3, 1.9, 4.0, 0.02);
        let direct = RegularizedState::new(
            0.0,
            s.alpha + r * a.cos() * b.cos(),
            s.alpha + r * a.cos() * b.sin(),
            std::f64::consts::SQRT_2,
            s.beta + r * a.sin() * c.cos(),
            -s.beta + r * a.sin() * c.sin(),
        );
        assert!((swap_23(&perturbed_initial(a, b, c, r, &s)) - direct).amax() < 1e-15);
    }

    #[test]
    fn axis_aligned_shift() {
        let s = sol();
        let p = perturbed_initial(0.0, 0.0, 0.0, 0.005, &s);
        let mut expected = s.initial_state();
        expected[2] += 0.005;
        assert_eq!(p, expected);
    }

    #[test]
    fn default_grid_shape() {
        let c = SweepConfig::default();
        assert_eq!(c.a_grid.len(), 12);
        assert_eq!(c.r_grid.len(), 20);
        assert!((c.r_grid[19] - 0.1).abs() < 1e-15);
        assert!((c.a_grid[1] - PI / 6.0).abs() < 1e-15);
        assert_eq!(c.points().len(), 20 * 12 * 12 * 12);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(SweepConfig::default().with_radii(vec![]).validate().is_err());
        assert!(SweepConfig::default().with_radii(vec![-0.1]).validate().is_err());
        assert!(SweepConfig::default().with_angles(vec![]).validate().is_err());
    }

    #[test]
    fn distance_symmetric_in_sign() {
        let r = sol().initial_state();
        let x = r * 0.9;
        assert_eq!(distance_to_orbit(&x, &r), distance_to_orbit(&x, &(-r)));
    }

    #[test]
    fn summary_counts_and_nan_for_all_early() {
        let rec = |r, early, d| SweepRecord {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            r,
            collisions_reached: if early { 3 } else { 200 },
            max_distance: d,
            terminated_early: early,
        };
        let rows = summarize(&[rec(0.1, false, 0.2), rec(0.1, true, 5.0), rec(0.2, true, 1.0)], &[0.2, 0.1]);
        assert_eq!(rows[0].r, 0.1);
        assert_eq!(rows[0].n_early, 1);
        assert!(!rows[0].all_reached);
        assert_eq!(rows[0].dist_max, 0.2);
        assert!(rows[1].dist_max.is_nan());
    }
}
