//! Invariant battery over a computed orbit.
//!
//! Every check reports its measured value next to the threshold it must stay
//! under. [`Faults`] swaps in deliberately broken ingredients so that callers
//! can confirm the battery notices them.

use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{self, EnergyLevel, RegularizedState};
use crate::error::Result;
use crate::integrator::{propagate, uniform_grid, IntegratorConfig, RegularizedFlow};
use crate::linalg::{max_abs, symplectic_defect};
use crate::orbit::{collision_sequence, identity_residuals, PeriodicOrbit, SymmetryMatrix};
use crate::shooting::{verify_midpoint, OrbitSolution};
use crate::stability::{
    compute_d, compute_w_from, k_block, monodromy_check, stability_verdict, symplectic_inverse,
};
use crate::variational::{variational_path_with, compute_b_with};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Use `S_fᵀ` wherever `S_f` is needed.
    pub transpose_sf: bool,
    /// Scale `∂²Γ/∂P₁²` by `1 + 1e-3`.
    pub hessian_perturbation: bool,
    /// Negate `W`.
    pub flip_w_sign: bool,
}

impl Faults {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn any(&self) -> bool {
        self.transpose_sf || self.hessian_perturbation || self.flip_w_sign
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub random_states: usize,
    pub seed: u64,
    pub fd_epsilon: f64,
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            random_states: 100,
            seed: 0x5eed_cafe,
            fd_epsilon: 1e-7,
            samples: 400,
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Random state with every `|Q_i| ∈ [0.3, 2]` and `P_i ∈ [−2, 2]`.
pub fn random_state<R: Rng>(rng: &mut R) -> RegularizedState {
    let mut s = Vector6::zeros();
    for i in 0..3 {
        let mag: f64 = rng.random_range(0.3..2.0);
        s[i] = if rng.random_bool(0.5) { mag } else { -mag };
        s[i + 3] = rng.random_range(-2.0..2.0);
    }
    s
}

/// `max_ij |a − b| / (|b_ij| + 1e-4 max|b|)`.
fn entrywise_rel<R, C, S1, S2>(a: &nalgebra::Matrix<f64, R, C, S1>, b: &nalgebra::Matrix<f64, R, C, S2>) -> f64
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S1: nalgebra::RawStorage<f64, R, C>,
    S2: nalgebra::RawStorage<f64, R, C>,
{
    let floor = 1e-4 * max_abs(b);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / (y.abs() + floor))
        .fold(0.0, f64::max)
}

pub fn fd_gradient(s: &RegularizedState, e: EnergyLevel) -> Vector6<f64> {
    let mut g = Vector6::zeros();
    for k in 0..6 {
        let h = 1e-5 * s[k].abs().max(1.0);
        let (mut up, mut dn) = (*s, *s);
        up[k] += h;
        dn[k] -= h;
        g[k] = (dynamics::gamma_value(&up, e) - dynamics::gamma_value(&dn, e)) / (2.0 * h);
    }
    g
}

pub fn fd_hessian(s: &RegularizedState, e: EnergyLevel) -> Result<Matrix6<f64>> {
    let mut h = Matrix6::zeros();
    for k in 0..6 {
        let step = 1e-6 * s[k].abs().max(1.0);
        let (mut up, mut dn) = (*s, *s);
        up[k] += step;
        dn[k] -= step;
        let col = (dynamics::gradient(&up, e)? - dynamics::gradient(&dn, e)?) / (2.0 * step);
        h.set_column(k, &col);
    }
    Ok((h + h.transpose()) * 0.5)
}

fn hessian_for(faults: Faults) -> impl Fn(&RegularizedState, EnergyLevel) -> Result<Matrix6<f64>> + Copy {
    move |s, e| {
        let mut h = dynamics::hessian(s, e)?;
        if faults.hessian_perturbation {
            h[(3, 3)] *= 1.0 + 1e-3;
        }
        Ok(h)
    }
}

/// Runs every check against `sol`.
pub fn run_battery(
    sol: &OrbitSolution,
    icfg: &IntegratorConfig,
    vcfg: &VerifyConfig,
    faults: Faults,
) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let e = sol.energy;
    let tau = sol.tau;
    let sf_true = SymmetryMatrix::time_preserving().entries;
    let sf = if faults.transpose_sf {
        sf_true.transpose()
    } else {
        sf_true
    };
    let sr = SymmetryMatrix::time_reversing().entries;
    let y0 = SymmetryMatrix::frame_y0().entries;
    let lambda = SymmetryMatrix::lambda().entries;
    let hess = hessian_for(faults);

    for (name, value) in identity_residuals(&sf, &sr, &y0) {
        checks.push(Check::new(format!("identity: {name}"), value, 1e-12));
    }

    checks.push(Check::new("midpoint residual", verify_midpoint(sol, icfg)?, 1e-6));

    let po = PeriodicOrbit::integrated(*sol, icfg)?;
    checks.push(Check::new(
        "orbit: gamma(s + 2tau) = S_f gamma(s)",
        po.time_preserving_defect(&sf, vcfg.samples),
        1e-6,
    ));
    checks.push(Check::new(
        "orbit: gamma(2tau - s) = S_r gamma(s)",
        po.time_reversing_defect(vcfg.samples),
        1e-6,
    ));
    let closure = (po.full.final_state() - sol.initial_state()).amax();
    checks.push(Check::new("orbit: gamma(12tau) = gamma(0)", closure, 1e-6));
    checks.push(Check::new(
        "orbit: collision sequence 1,2,3,1,2,3",
        if collision_sequence(&po).is_ok() { 0.0 } else { 1.0 },
        0.0,
    ));

    let mut drift: f64 = 0.0;
    for step in po.full.steps() {
        for s in [step.start(), step.eval(step.s0 + 0.5 * step.h), step.end()] {
            drift = drift.max(dynamics::gamma_value(&s, e).abs());
        }
    }
    checks.push(Check::new("conservation: max |Gamma| over one period", drift, 1e-9));

    let mut rng = ChaCha8Rng::seed_from_u64(vcfg.seed);
    let (mut grad_err, mut hess_err) = (0.0_f64, 0.0_f64);
    for _ in 0..vcfg.random_states {
        let s = random_state(&mut rng);
        grad_err = grad_err.max(entrywise_rel(&dynamics::gradient(&s, e)?, &fd_gradient(&s, e)));
        hess_err = hess_err.max(entrywise_rel(&hess(&s, e)?, &fd_hessian(&s, e)?));
    }
    checks.push(Check::new("derivatives: gradient vs finite differences", grad_err, 1e-6));
    checks.push(Check::new("derivatives: Hessian vs finite differences", hess_err, 1e-6));

    // Variational equation against perturbed trajectories on (0, tau].
    let g0 = sol.initial_state();
    let points = uniform_grid(0.0, tau, 5)[1..].to_vec();
    let path = variational_path_with(hess, &g0, &Matrix6::identity(), e, 0.0, &points, icfg)?;
    let flow = RegularizedFlow { energy: e };
    let eps = vcfg.fd_epsilon;
    let mut var_err: f64 = 0.0;
    let mut fd_cols = vec![Matrix6::<f64>::zeros(); points.len()];
    for k in 0..6 {
        let (mut up, mut dn) = (g0, g0);
        up[k] += eps;
        dn[k] -= eps;
        let a = propagate(&flow, 0.0, up, &points, icfg)?;
        let b = propagate(&flow, 0.0, dn, &points, icfg)?;
        for (j, m) in fd_cols.iter_mut().enumerate() {
            m.set_column(k, &((a[j] - b[j]) / (2.0 * eps)));
        }
    }
    let mut sympl: f64 = 0.0;
    for (v, fd) in path.iter().zip(&fd_cols) {
        for k in 0..6 {
            let col = v.y.column(k);
            let ref_col = fd.column(k);
            var_err = var_err.max((col - ref_col).amax() / ref_col.amax());
        }
        sympl = sympl.max(symplectic_defect(&v.y));
    }
    checks.push(Check::new("variational: Y(s) vs finite differences on [0, tau]", var_err, 1e-5));
    checks.push(Check::new("variational: symplectic drift on [0, tau]", sympl, 1e-8));

    // Reduction identities against direct integration of X(s), X(0) = I.
    let s_half = 0.5 * tau;
    let xs_points = [s_half, tau, 2.0 * tau, s_half + 2.0 * tau, 12.0 * tau];
    let xs = variational_path_with(hess, &g0, &Matrix6::identity(), e, 0.0, &xs_points, icfg)?;
    let (x_half, a, x2, x_half_2, x12) = (xs[0].y, xs[1].y, xs[2].y, xs[3].y, xs[4].y);
    let a_inv = symplectic_inverse(&a)?;
    checks.push(Check::new(
        "reduction: X(2tau) = S_r A^-1 S_r A",
        max_abs(&(x2 - sr * a_inv * sr * a)),
        1e-6,
    ));
    let base = sf.transpose() * x2;
    checks.push(Check::new(
        "reduction: X(12tau) = (S_f^T X(2tau))^6",
        max_abs(&(x12 - base.pow(6))),
        1e-4,
    ));
    checks.push(Check::new(
        "reduction: X(s + 2tau) = S_f X(s) S_f^T X(2tau) at s = tau/2",
        max_abs(&(x_half_2 - sf * x_half * sf.transpose() * x2)),
        1e-6,
    ));
    checks.push(Check::new(
        "variational: symplectic drift of X(12tau)",
        symplectic_defect(&x12),
        1e-8,
    ));

    let b = compute_b_with(hess, sol, icfg)?;
    let b_inv = symplectic_inverse(&b)?;
    checks.push(Check::new(
        "stability: B^-1 B = I",
        max_abs(&(b_inv * b - Matrix6::identity())),
        1e-9,
    ));
    checks.push(Check::new(
        "reduction: Y(2tau) = S_r Y0 B^-1 S_r B",
        max_abs(&(x2 * y0 - sr * y0 * b_inv * sr * b)),
        1e-6,
    ));

    let mut w = compute_w_from(&b, &sf, &sr, &y0)?;
    if faults.flip_w_sign {
        w = -w;
    }
    let d = compute_d(&b)?;
    checks.push(Check::new("stability: W = Lambda D", max_abs(&(w - lambda * d)), 1e-7));
    checks.push(Check::new(
        "stability: D^2 = I",
        max_abs(&(d * d - Matrix6::identity())),
        1e-7,
    ));
    checks.push(Check::new("stability: W symplectic", symplectic_defect(&w), 1e-7));
    let e1 = Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    checks.push(Check::new("stability: W e1 = e1", (w * e1 - e1).amax(), 1e-5));

    let (k, block_residual) = k_block(&w);
    checks.push(Check::new("stability: (W + W^-1)/2 block residual", block_residual, 1e-5));
    let spec = stability_verdict(&k);
    checks.push(Check::new("stability: K first row = (1, 0, 0)", spec.k_row_residual, 5e-3));

    let mono = monodromy_check(&w);
    checks.push(Check::new("monodromy: max ||mu| - 1|", mono.modulus_defect, 1e-3));
    checks.push(Check::new("monodromy: unit pair distance from 1", mono.unit_pair_defect, 1e-3));

    let w_unit = w
        .complex_eigenvalues()
        .iter()
        .all(|z| (z.norm() - 1.0).abs() <= 1e-6);
    let k_real = [spec.lambda1, spec.lambda2]
        .iter()
        .all(|l| l.im.abs() <= 1e-6 && l.re.abs() <= 1.0 + 1e-6);
    checks.push(Check::new(
        "stability: |eig W| = 1 iff eig K real in [-1, 1]",
        if w_unit == k_real { 0.0 } else { 1.0 },
        0.0,
    ));
    Ok(checks)
}
