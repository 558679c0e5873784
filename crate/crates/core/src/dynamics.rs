//! Physical and regularized Hamiltonians of the cubic eight-body configuration.
//!
//! Eight unit masses sit at `(±q₁, ±q₂, ±q₃)`. After the square-root change of
//! variables `q = Q²`, `p = P / 2Q` and the time change `dt/ds = Q₁²Q₂²Q₃²`, the
//! motion is the Hamiltonian flow of the polynomial-algebraic function Γ on the
//! level set Γ = 0. Collisions `Q_i = 0` are regular points of that flow.
//!
//! All derivatives here are analytic. Indices run over `0..3` internally and the
//! state is flattened as `(Q₁, Q₂, Q₃, P₁, P₂, P₃)`.

use nalgebra::{Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Regularized phase-space point `(Q₁, Q₂, Q₃, P₁, P₂, P₃)`.
pub type RegularizedState = Vector6<f64>;

/// Denominators below this value are treated as a higher-order collision.
pub const HIGHER_ORDER_GUARD: f64 = 1e-300;

/// Default `|Q_i|` below which a state is considered to be in collision.
pub const COLLISION_TOL: f64 = 1e-13;

/// Fixed value of the physical Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EnergyLevel(pub f64);

impl EnergyLevel {
    pub const fn new(e: f64) -> Self {
        Self(e)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Bound motion (`E < 0`) is required to close the orbit.
    pub fn is_bound(self) -> bool {
        self.0 < 0.0
    }
}

impl Default for EnergyLevel {
    fn default() -> Self {
        Self(-1.0)
    }
}

/// First-octant body position and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalState {
    pub q: Vector3<f64>,
    pub p: Vector3<f64>,
}

/// Index sets of the four potential denominators: the cube diagonal and the three face diagonals.
const DENOMINATOR_SETS: [[bool; 3]; 4] = [
    [true, true, true],
    [true, true, false],
    [true, false, true],
    [false, true, true],
];

/// Γ evaluated term by term in its displayed grouping.
pub fn gamma_value(s: &RegularizedState, e: EnergyLevel) -> f64 {
    let (q1, q2, q3) = (s[0] * s[0], s[1] * s[1], s[2] * s[2]);
    let (p1, p2, p3) = (s[3] * s[3], s[4] * s[4], s[5] * s[5]);
    let m = q1 * q2 * q3;
    p1 * q2 * q3 + q1 * p2 * q3 + q1 * q2 * p3
        - 2.0 * m / (q1 * q1 + q2 * q2 + q3 * q3).sqrt()
        - 2.0 * m / (q1 * q1 + q2 * q2).sqrt()
        - 2.0 * m / (q1 * q1 + q3 * q3).sqrt()
        - 2.0 * m / (q2 * q2 + q3 * q3).sqrt()
        - 2.0 * q2 * q3
        - 2.0 * q1 * q3
        - 2.0 * q1 * q2
        - e.0 * m
}

/// `S_σ = Σ_{j∈σ} Q_j⁴` for each denominator set, guarded against vanishing.
fn denominators(q2: &[f64; 3]) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, set) in out.iter_mut().zip(DENOMINATOR_SETS.iter()) {
        let sum: f64 = (0..3).filter(|&j| set[j]).map(|j| q2[j] * q2[j]).sum();
        if sum < HIGHER_ORDER_GUARD {
            return Err(Error::HigherOrderCollision { denominator: sum });
        }
        *slot = sum;
    }
    Ok(out)
}

/// `(∂Γ/∂Q₁, ∂Γ/∂Q₂, ∂Γ/∂Q₃, ∂Γ/∂P₁, ∂Γ/∂P₂, ∂Γ/∂P₃)`.
pub fn gradient(s: &RegularizedState, e: EnergyLevel) -> Result<Vector6<f64>> {
    let q = [s[0], s[1], s[2]];
    let p = [s[3], s[4], s[5]];
    let q2 = [q[0] * q[0], q[1] * q[1], q[2] * q[2]];
    let m = q2[0] * q2[1] * q2[2];
    let sums = denominators(&q2)?;
    let g: [f64; 4] = sums.map(|x| 1.0 / x.sqrt());

    let mut grad = Vector6::zeros();
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        // ∂m/∂Q_k
        let dm = 2.0 * q[k] * q2[a] * q2[b];
        // Σ_{i≠k} P_i² ∂(Q_j²Q_l²)/∂Q_k
        let kinetic = 2.0 * q[k] * (p[a] * p[a] * q2[b] + p[b] * p[b] * q2[a]);
        let mut potential = 0.0;
        for (set, &gs) in DENOMINATOR_SETS.iter().zip(g.iter()) {
            let dg = if set[k] { -2.0 * q[k] * q2[k] * gs * gs * gs } else { 0.0 };
            potential += dm * gs + m * dg;
        }
        let edges = 2.0 * q[k] * (q2[a] + q2[b]);
        grad[k] = kinetic - 2.0 * potential - 2.0 * edges - e.0 * dm;
        grad[k + 3] = 2.0 * p[k] * q2[a] * q2[b];
    }
    Ok(grad)
}

/// Hamiltonian vector field `(∂Γ/∂P, −∂Γ/∂Q)`.
pub fn vector_field(s: &RegularizedState, e: EnergyLevel) -> Result<RegularizedState> {
    let g = gradient(s, e)?;
    Ok(Vector6::new(g[3], g[4], g[5], -g[0], -g[1], -g[2]))
}

/// Value, gradient and Hessian of a scalar function of `(Q₁, Q₂, Q₃)`.
#[derive(Clone, Copy, Default)]
struct Jet {
    value: f64,
    grad: [f64; 3],
    hess: [[f64; 3]; 3],
}

impl Jet {
    /// `Π_{j∈set} Q_j²`
    fn square_product(q: &[f64; 3], set: [bool; 3]) -> Self {
        let prod_except = |skip: &[usize]| -> f64 {
            (0..3)
                .filter(|j| set[*j] && !skip.contains(j))
                .map(|j| q[j] * q[j])
                .product()
        };
        let mut jet = Jet {
            value: prod_except(&[]),
            ..Default::default()
        };
        for k in (0..3).filter(|&k| set[k]) {
            jet.grad[k] = 2.0 * q[k] * prod_except(&[k]);
            jet.hess[k][k] = 2.0 * prod_except(&[k]);
            for l in (0..3).filter(|&l| l != k && set[l]) {
                jet.hess[k][l] = 4.0 * q[k] * q[l] * prod_except(&[k, l]);
            }
        }
        jet
    }

    /// `S^{-1/2}` with `S = Σ_{j∈set} Q_j⁴` given.
    fn inverse_root(q: &[f64; 3], set: [bool; 3], sum: f64) -> Self {
        let g = 1.0 / sum.sqrt();
        let g3 = g * g * g;
        let g5 = g3 * g * g;
        let mut jet = Jet {
            value: g,
            ..Default::default()
        };
        for k in (0..3).filter(|&k| set[k]) {
            let qk3 = q[k] * q[k] * q[k];
            jet.grad[k] = -2.0 * qk3 * g3;
            for l in (0..3).filter(|&l| set[l]) {
                let ql3 = q[l] * q[l] * q[l];
                let diag = if k == l { -6.0 * q[k] * q[k] * g3 } else { 0.0 };
                jet.hess[k][l] = diag + 12.0 * qk3 * ql3 * g5;
            }
        }
        jet
    }

    fn mul(&self, other: &Jet) -> Jet {
        let mut out = Jet {
            value: self.value * other.value,
            ..Default::default()
        };
        for k in 0..3 {
            out.grad[k] = self.grad[k] * other.value + self.value * other.grad[k];
            for l in 0..3 {
                out.hess[k][l] = self.hess[k][l] * other.value
                    + self.grad[k] * other.grad[l]
                    + self.grad[l] * other.grad[k]
                    + self.value * other.hess[k][l];
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &Jet, c: f64) {
        self.value += c * other.value;
        for k in 0..3 {
            self.grad[k] += c * other.grad[k];
            for l in 0..3 {
                self.hess[k][l] += c * other.hess[k][l];
            }
        }
    }
}

/// Analytic second derivatives `D²Γ` in `(Q, P)` ordering.
///
/// Only the upper triangle is computed; the lower triangle is its mirror, so the
/// result is exactly symmetric.
pub fn hessian(s: &RegularizedState, e: EnergyLevel) -> Result<Matrix6<f64>> {
    let q = [s[0], s[1], s[2]];
    let p = [s[3], s[4], s[5]];
    let q2 = [q[0] * q[0], q[1] * q[1], q[2] * q[2]];
    let sums = denominators(&q2)?;

    let all = [true; 3];
    let m = Jet::square_product(&q, all);

    // Q-block of Γ at fixed P.
    let mut total = Jet::default();
    let mut kinetic_coeffs = [Jet::default(); 3];
    for i in 0..3 {
        let mut set = all;
        set[i] = false;
        kinetic_coeffs[i] = Jet::square_product(&q, set);
        total.add_scaled(&kinetic_coeffs[i], p[i] * p[i]);
    }
    for (set, &sum) in DENOMINATOR_SETS.iter().zip(sums.iter()) {
        let term = m.mul(&Jet::inverse_root(&q, *set, sum));
        total.add_scaled(&term, -2.0);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let mut set = [false; 3];
            set[i] = true;
            set[j] = true;
            total.add_scaled(&Jet::square_product(&q, set), -2.0);
        }
    }
    total.add_scaled(&m, -e.0);

    let mut h = Matrix6::zeros();
    for k in 0..3 {
        for l in k..3 {
            h[(k, l)] = total.hess[k][l];
        }
        // ∂²Γ/∂Q_k∂P_i = 2 P_i ∂c_i/∂Q_k
        for i in 0..3 {
            h[(k, i + 3)] = 2.0 * p[i] * kinetic_coeffs[i].grad[k];
        }
        h[(k + 3, k + 3)] = 2.0 * kinetic_coeffs[k].value;
    }
    for r in 0..6 {
        for c in 0..r {
            h[(r, c)] = h[(c, r)];
        }
    }
    Ok(h)
}

/// `dt/ds = Q₁²Q₂²Q₃²`.
pub fn time_scale(s: &RegularizedState) -> f64 {
    (s[0] * s[1] * s[2]).powi(2)
}

/// Maps a regularized state back to physical coordinates with the default collision tolerance.
pub fn to_physical(s: &RegularizedState) -> Result<PhysicalState> {
    to_physical_with_tol(s, COLLISION_TOL)
}

pub fn to_physical_with_tol(s: &RegularizedState, tol: f64) -> Result<PhysicalState> {
    for axis in 0..3 {
        if s[axis].abs() < tol {
            return Err(Error::Collision {
                axis: axis + 1,
                magnitude: s[axis].abs(),
            });
        }
    }
    Ok(PhysicalState {
        q: Vector3::new(s[0] * s[0], s[1] * s[1], s[2] * s[2]),
        p: Vector3::new(
            s[3] / (2.0 * s[0]),
            s[4] / (2.0 * s[1]),
            s[5] / (2.0 * s[2]),
        ),
    })
}

/// Physical Hamiltonian `H = 4|p|² − U` at a non-collision state.
pub fn physical_energy(x: &PhysicalState) -> f64 {
    let q = &x.q;
    let (a, b, c) = (q[0] * q[0], q[1] * q[1], q[2] * q[2]);
    let u = 2.0 / (a + b + c).sqrt()
        + 2.0 / (a + b).sqrt()
        + 2.0 / (a + c).sqrt()
        + 2.0 / (b + c).sqrt()
        + 2.0 / q[0]
        + 2.0 / q[1]
        + 2.0 / q[2];
    4.0 * x.p.norm_squared() - u
}

/// Cumulative physical time `t(s) = ∫ Q₁²Q₂²Q₃² ds` at every sample of `traj`.
///
/// Each step is integrated with Simpson's rule using the dense-output midpoint,
/// so `t(0) = 0` and the result is non-decreasing.
pub fn physical_time(traj: &Trajectory) -> Vec<f64> {
    PhysicalClock::new(traj).cumulative
}

/// Physical time along a trajectory, queryable at any `s` within its span.
#[derive(Debug, Clone)]
pub struct PhysicalClock<'a> {
    traj: &'a Trajectory,
    cumulative: Vec<f64>,
}

impl<'a> PhysicalClock<'a> {
    pub fn new(traj: &'a Trajectory) -> Self {
        let samples = traj.samples();
        let mut cumulative = Vec::with_capacity(samples.len());
        let mut t = 0.0;
        if !samples.is_empty() {
            cumulative.push(0.0);
        }
        for (i, w) in samples.windows(2).enumerate() {
            t += Self::simpson(traj, i, w[0].0, w[1].0);
            cumulative.push(t);
        }
        Self { traj, cumulative }
    }

    fn simpson(traj: &Trajectory, segment: usize, a: f64, b: f64) -> f64 {
        let fa = time_scale(&traj.eval_segment(segment, a));
        let fm = time_scale(&traj.eval_segment(segment, 0.5 * (a + b)));
        let fb = time_scale(&traj.eval_segment(segment, b));
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    /// Physical time at regularized time `s`, or `None` outside the trajectory span.
    pub fn at(&self, s: f64) -> Option<f64> {
        let samples = self.traj.samples();
        let i = self.traj.segment_index(s)?;
        if i + 1 >= samples.len() {
            return self.cumulative.last().copied();
        }
        let a = samples[i].0;
        Some(self.cumulative[i] + Self::simpson(self.traj, i, a, s))
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;
    const E: EnergyLevel = EnergyLevel(-1.0);

    fn sample_state() -> RegularizedState {
        Vector6::new(0.7, 1.3, -0.4, 0.2, -1.1, 0.9)
    }

    #[test]
    fn gamma_vanishes_at_collision_initial_condition() {
        for &(alpha, beta) in &[(3.1, 0.67), (1.0, -2.0), (0.3, 0.0)] {
            let s = Vector6::new(0.0, alpha, alpha, SQRT2, -beta, beta);
            let g = gamma_value(&s, EnergyLevel(-3.0));
            assert!(g.abs() < 1e-12 * alpha.powi(4), "Γ = {g}");
        }
    }

    #[test]
    fn gamma_at_unit_cube_rest() {
        let s = Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);
        let expected = -2.0 / 3f64.sqrt() - 3.0 * SQRT2 - 6.0 + 1.0;
        assert!((gamma_value(&s, E) - expected).abs() < 1e-14);
        assert!((expected + 10.397).abs() < 1e-3);
    }

    #[test]
    fn collision_velocity_matches_closed_form() {
        let (alpha, beta) = (3.100685, 0.668162);
        let s = Vector6::new(0.0, alpha, alpha, SQRT2, -beta, beta);
        let f = vector_field(&s, E).unwrap();
        let expected = 2.0 * SQRT2 * alpha.powi(4);
        assert!((f[0] - expected).abs() < 1e-12 * expected);
        for k in 1..6 {
            assert!(f[k].abs() < 1e-12, "component {k} = {}", f[k]);
        }
    }

    #[test]
    fn kinetic_hessian_entry_at_collision() {
        let alpha = 3.100685;
        let s = Vector6::new(0.0, alpha, alpha, SQRT2, -0.668162, 0.668162);
        let h = hessian(&s, E).unwrap();
        assert!((h[(3, 3)] - 2.0 * alpha.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let h = hessian(&sample_state(), E).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn gradient_matches_finite_differences_at_sample_state() {
        let s = sample_state();
        let g = gradient(&s, E).unwrap();
        let step = 1e-6;
        for k in 0..6 {
            let mut up = s;
            let mut dn = s;
            up[k] += step;
            dn[k] -= step;
            let fd = (gamma_value(&up, E) - gamma_value(&dn, E)) / (2.0 * step);
            assert!((fd - g[k]).abs() <= 1e-6 * g.norm(), "k={k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_at_sample_state() {
        let s = sample_state();
        let h = hessian(&s, E).unwrap();
        let step = 1e-5;
        let mut fd = Matrix6::zeros();
        for k in 0..6 {
            let mut up = s;
            let mut dn = s;
            up[k] += step;
            dn[k] -= step;
            let col = (gradient(&up, E).unwrap() - gradient(&dn, E).unwrap()) / (2.0 * step);
            fd.set_column(k, &col);
        }
        let rel = crate::linalg::max_abs(&(h - fd)) / crate::linalg::max_abs(&fd);
        assert!(rel < 1e-6, "relative error {rel:e}");
    }

    #[test]
    fn gamma_literal_agrees_with_jet_value() {
        // The Jet-based Hessian assembles Γ's Q-part independently of the literal formula.
        let s = sample_state();
        let q = [s[0], s[1], s[2]];
        let q2 = q.map(|x| x * x);
        let sums = denominators(&q2).unwrap();
        let m = Jet::square_product(&q, [true; 3]);
        let mut total = Jet::default();
        for i in 0..3 {
            let mut set = [true; 3];
            set[i] = false;
            total.add_scaled(&Jet::square_product(&q, set), s[i + 3] * s[i + 3]);
        }
        for (set, &sum) in DENOMINATOR_SETS.iter().zip(sums.iter()) {
            total.add_scaled(&m.mul(&Jet::inverse_root(&q, *set, sum)), -2.0);
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            total.add_scaled(&Jet::square_product(&q, [i == 0, i == 1 || j == 1, j == 2]), -2.0);
        }
        total.add_scaled(&m, 1.0);
        assert!((total.value - gamma_value(&s, E)).abs() < 1e-13);
    }

    #[test]
    fn higher_order_collision_is_reported() {
        let s = Vector6::new(0.0, 0.0, 1.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            vector_field(&s, E),
            Err(Error::HigherOrderCollision { .. })
        ));
        assert!(matches!(hessian(&s, E), Err(Error::HigherOrderCollision { .. })));
        // A single vanishing coordinate is a regular point.
        assert!(vector_field(&Vector6::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0), E).is_ok());
    }

    #[test]
    fn to_physical_examples() {
        let x = to_physical(&Vector6::new(1.0, 1.0, 1.0, 2.0, 2.0, 2.0)).unwrap();
        assert_eq!(x.q, Vector3::new(1.0, 1.0, 1.0));
        assert_eq!(x.p, Vector3::new(1.0, 1.0, 1.0));
        let x = to_physical(&Vector6::new(2.0, 1.0, 1.0, 4.0, 0.0, 0.0)).unwrap();
        assert_eq!(x.q, Vector3::new(4.0, 1.0, 1.0));
        assert_eq!(x.p, Vector3::new(1.0, 0.0, 0.0));
        let err = to_physical(&Vector6::new(0.0, 3.1, 3.1, SQRT2, -0.6, 0.6)).unwrap_err();
        assert_eq!(err, Error::Collision { axis: 1, magnitude: 0.0 });
    }

    #[test]
    fn regularized_gamma_is_time_scaled_energy_difference() {
        let s = sample_state();
        let x = to_physical(&s).unwrap();
        let lhs = gamma_value(&s, E);
        let rhs = time_scale(&s) * (physical_energy(&x) - E.0);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}
