//! Shooting for the symmetric collision orbit.
//!
//! The orbit starts in collision at `γ(0) = (0, α, α, √2, −β, β)`. Its first
//! return to `Q₁ = 0` at `s = 6τ` must land on `−γ(0)`, so the search minimizes
//! `‖γ(0) + γ(6τ)‖` over `(α, β)`. Local minima of that residual are screened
//! by checking the intermediate collision `γ(2τ) = (α, 0, α, β, −√2, −β)`.

use std::f64::consts::SQRT_2;

use nalgebra::{Vector2, Vector6};
use rayon::prelude::*;

use crate::dynamics::{EnergyLevel, RegularizedState};
use crate::error::{Error, Result};
use crate::integrator::{integrate_to_event, IntegratorConfig};

/// Parameters of a located periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSolution {
    pub alpha: f64,
    pub beta: f64,
    /// One twelfth of the regularized period.
    pub tau: f64,
    pub energy: EnergyLevel,
    /// Achieved `‖γ(0) + γ(6τ)‖`.
    pub residual: f64,
    /// Achieved `‖γ(2τ) − (α, 0, α, β, −√2, −β)‖`.
    pub midpoint_residual: f64,
}

impl OrbitSolution {
    pub fn initial_state(&self) -> RegularizedState {
        initial_condition(self.alpha, self.beta)
    }

    /// Regularized period `12τ`.
    pub fn period(&self) -> f64 {
        12.0 * self.tau
    }
}

/// `(0, α, α, √2, −β, β)`
pub fn initial_condition(alpha: f64, beta: f64) -> RegularizedState {
    Vector6::new(0.0, alpha, alpha, SQRT_2, -beta, beta)
}

/// `(α, 0, α, β, −√2, −β)`, the required state at the first `Q₂ = 0` crossing.
pub fn midpoint_target(alpha: f64, beta: f64) -> RegularizedState {
    Vector6::new(alpha, 0.0, alpha, beta, -SQRT_2, -beta)
}

/// Outcome of one shot from `γ(0)` to the next `Q₁ = 0` crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    pub residual: f64,
    /// Crossing time, `6τ` at a solution.
    pub six_tau: f64,
    pub end_state: RegularizedState,
}

pub fn shoot(alpha: f64, beta: f64, energy: EnergyLevel, cfg: &IntegratorConfig) -> Result<Shot> {
    if !(alpha > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "shooting needs alpha > 0 (got alpha {alpha}, beta {beta})"
        )));
    }
    let start = initial_condition(alpha, beta);
    let (end_state, six_tau) = integrate_to_event(start, energy, 1, 1, cfg)?;
    Ok(Shot {
        residual: (start + end_state).norm(),
        six_tau,
        end_state,
    })
}

/// `(‖γ(0) + γ(6τ)‖, 6τ)`, with `(+∞, NaN)` when no crossing is found.
pub fn residual(alpha: f64, beta: f64, energy: EnergyLevel, cfg: &IntegratorConfig) -> (f64, f64) {
    match shoot(alpha, beta, energy, cfg) {
        Ok(shot) => (shot.residual, shot.six_tau),
        Err(_) => (f64::INFINITY, f64::NAN),
    }
}

/// Coarse grid and simplex settings for [`find_orbit`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub alpha_spacing: f64,
    pub beta_spacing: f64,
    /// How many of the best grid points seed a simplex.
    pub refine_starts: usize,
    /// Simplex diameter at which refinement stops.
    pub simplex_tol: f64,
    pub max_iterations: usize,
    /// Residual a refined point must reach.
    pub tolerance: f64,
    pub midpoint_tolerance: f64,
    /// Step budget for each coarse-grid shot, so far-off starts fail fast.
    pub grid_max_steps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            alpha_range: (1.0, 5.0),
            beta_range: (0.1, 2.0),
            alpha_spacing: 0.25,
            beta_spacing: 0.1,
            refine_starts: 6,
            simplex_tol: 1e-12,
            max_iterations: 500,
            tolerance: 1e-9,
            midpoint_tolerance: 1e-6,
            grid_max_steps: 20_000,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok_range = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && hi >= lo;
        if !ok_range(self.alpha_range) || !ok_range(self.beta_range) {
            return Err(Error::InvalidConfig("search ranges must be finite and ordered".into()));
        }
        if !(self.alpha_range.0 > 0.0) {
            return Err(Error::InvalidConfig("alpha range must be positive".into()));
        }
        if !(self.alpha_spacing > 0.0 && self.beta_spacing > 0.0) {
            return Err(Error::InvalidConfig("grid spacings must be positive".into()));
        }
        if self.refine_starts == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "need at least one start and one iteration".into(),
            ));
        }
        Ok(())
    }

    /// Grid points in row-major `(alpha, beta)` order.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let axis = |(lo, hi): (f64, f64), step: f64| -> Vec<f64> {
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| lo + step * i as f64).collect()
        };
        let alphas = axis(self.alpha_range, self.alpha_spacing);
        let betas = axis(self.beta_range, self.beta_spacing);
        alphas
            .iter()
            .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
            .collect()
    }
}

/// Result of a Nelder–Mead minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexResult {
    pub x: Vector2<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Derivative-free Nelder–Mead in two dimensions.
///
/// Stops when every vertex lies within `tol` (max norm) of the best one, or after `max_iter`
/// iterations.
pub fn nelder_mead<F: Fn(Vector2<f64>) -> f64>(
    f: F,
    x0: Vector2<f64>,
    step: Vector2<f64>,
    tol: f64,
    max_iter: usize,
) -> SimplexResult {
    let mut simplex = [
        x0,
        x0 + Vector2::new(step[0], 0.0),
        x0 + Vector2::new(0.0, step[1]),
    ];
    let mut values = simplex.map(&f);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let diameter = simplex[1..]
            .iter()
            .map(|v| (v - simplex[0]).amax())
            .fold(0.0, f64::max);
        if diameter <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid = (simplex[0] + simplex[1]) * 0.5;
        let reflected = centroid + (centroid - simplex[2]);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = centroid + (centroid - simplex[2]) * 2.0;
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[2] {
            let c = centroid + (reflected - centroid) * 0.5;
            (c, f(c))
        } else {
            let c = centroid + (simplex[2] - centroid) * 0.5;
            (c, f(c))
        };
        if fc < values[2].min(fr) {
            simplex[2] = contracted;
            values[2] = fc;
            continue;
        }
        for i in 1..3 {
            simplex[i] = simplex[0] + (simplex[i] - simplex[0]) * 0.5;
            values[i] = f(simplex[i]);
        }
    }

    let best = (0..3)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best],
        value: values[best],
        iterations,
        converged,
    }
}

/// Intermediate-collision diagnostics for a candidate orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointCheck {
    pub residual: f64,
    /// Time of the first `Q₂ = 0` crossing, `2τ` at a solution.
    pub event_s: f64,
}

pub fn midpoint_check(sol: &OrbitSolution, cfg: &IntegratorConfig) -> Result<MidpointCheck> {
    let (state, event_s) = integrate_to_event(sol.initial_state(), sol.energy, 2, 1, cfg)?;
    Ok(MidpointCheck {
        residual: (state - midpoint_target(sol.alpha, sol.beta)).norm(),
        event_s,
    })
}

/// `‖γ(2τ) − (α, 0, α, β, −√2, −β)‖`.
pub fn verify_midpoint(sol: &OrbitSolution, cfg: &IntegratorConfig) -> Result<f64> {
    midpoint_check(sol, cfg).map(|m| m.residual)
}

/// Builds the solution record for given `(α, β)` by shooting once and checking the midpoint.
pub fn evaluate_solution(
    alpha: f64,
    beta: f64,
    energy: EnergyLevel,
    cfg: &IntegratorConfig,
) -> Result<OrbitSolution> {
    let shot = shoot(alpha, beta, energy, cfg)?;
    let mut sol = OrbitSolution {
        alpha,
        beta,
        tau: shot.six_tau / 6.0,
        energy,
        residual: shot.residual,
        midpoint_residual: f64::NAN,
    };
    sol.midpoint_residual = verify_midpoint(&sol, cfg)?;
    Ok(sol)
}

/// Locates the periodic orbit at energy `energy`.
///
/// The coarse grid is scanned in parallel; the best points are then refined one after another
/// and the first that meets both the residual and the midpoint tolerance is returned.
pub fn find_orbit(
    energy: EnergyLevel,
    search: &SearchConfig,
    cfg: &IntegratorConfig,
) -> Result<OrbitSolution> {
    if !energy.is_bound() || !energy.value().is_finite() {
        return Err(Error::InvalidConfig(format!(
            "the collision orbit needs E < 0 (got {})",
            energy.value()
        )));
    }
    search.validate()?;
    cfg.validate()?;

    let grid_cfg = IntegratorConfig {
        max_steps: search.grid_max_steps.min(cfg.max_steps),
        ..*cfg
    };
    let grid = search.grid();
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&(a, b)| residual(a, b, energy, &grid_cfg).0)
        .collect();
    let mut ranked: Vec<usize> = (0..grid.len()).filter(|&i| scores[i].is_finite()).collect();
    ranked.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
    ranked.truncate(search.refine_starts);
    if ranked.is_empty() {
        return Err(Error::AllStartsFailed {
            starts: 0,
            best_residual: f64::INFINITY,
        });
    }

    let objective = |x: Vector2<f64>| residual(x[0], x[1], energy, cfg).0;
    let step = Vector2::new(search.alpha_spacing, search.beta_spacing) * 0.5;
    let mut best_residual = f64::INFINITY;
    let mut all_unconverged = true;
    let mut last_iterations = 0;
    for &i in &ranked {
        let (a, b) = grid[i];
        let fit = nelder_mead(
            objective,
            Vector2::new(a, b),
            step,
            search.simplex_tol,
            search.max_iterations,
        );
        best_residual = best_residual.min(fit.value);
        last_iterations = fit.iterations;
        if fit.value > search.tolerance {
            if fit.converged {
                all_unconverged = false;
            }
            continue;
        }
        all_unconverged = false;
        let Ok(sol) = evaluate_solution(fit.x[0], fit.x[1], energy, cfg) else {
            continue;
        };
        if sol.residual <= search.tolerance && sol.midpoint_residual <= search.midpoint_tolerance {
            return Ok(sol);
        }
    }
    if all_unconverged {
        return Err(Error::NoConvergence {
            iterations: last_iterations,
            residual: best_residual,
        });
    }
    Err(Error::AllStartsFailed {
        starts: ranked.len(),
        best_residual,
    })
}
