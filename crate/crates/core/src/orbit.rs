//! Symmetry algebra of the cubic orbit and assembly of the full period.
//!
//! `S_f` maps the orbit forward by `2τ` (a 120° rotation about `x = y = z`
//! combined with regularization signs), `S_r` reverses it about `s = τ`, and
//! `Y₀` is the orthogonal symplectic frame in which the reduced monodromy
//! problem takes block form.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix6, Vector6};

use crate::dynamics::RegularizedState;
use crate::error::{Error, Result};
use crate::integrator::{integrate, DenseStep, EventRecord, IntegratorConfig, Trajectory};
use crate::linalg::{max_abs, symplectic_j};
use crate::shooting::OrbitSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryKind {
    TimePreserving,
    TimeReversing,
    InvolutionLambda,
    FrameY0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryMatrix {
    pub entries: Matrix6<f64>,
    pub kind: SymmetryKind,
}

fn signed_permutation(entries: &[(usize, usize, f64)]) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for &(i, j, v) in entries {
        m[(i, j)] = v;
    }
    m
}

impl SymmetryMatrix {
    /// `S_f`: `γ(s + 2τ) = S_f γ(s)`.
    pub fn time_preserving() -> Self {
        Self {
            entries: signed_permutation(&[
                (0, 2, 1.0),
                (1, 0, -1.0),
                (2, 1, 1.0),
                (3, 5, 1.0),
                (4, 3, -1.0),
                (5, 4, 1.0),
            ]),
            kind: SymmetryKind::TimePreserving,
        }
    }

    /// `S_r`: `γ(2τ − s) = S_r γ(s)`.
    pub fn time_reversing() -> Self {
        Self {
            entries: signed_permutation(&[
                (0, 1, 1.0),
                (1, 0, 1.0),
                (2, 2, 1.0),
                (3, 4, -1.0),
                (4, 3, -1.0),
                (5, 5, -1.0),
            ]),
            kind: SymmetryKind::TimeReversing,
        }
    }

    /// `Λ = diag(I₃, −I₃)`.
    pub fn lambda() -> Self {
        Self {
            entries: Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0, -1.0, -1.0, -1.0)),
            kind: SymmetryKind::InvolutionLambda,
        }
    }

    /// The initial frame `Y₀`, with `δ = √2/2`.
    pub fn frame_y0() -> Self {
        let d = FRAC_1_SQRT_2;
        Self {
            entries: signed_permutation(&[
                (0, 0, 1.0),
                (1, 2, -d),
                (1, 4, d),
                (2, 2, d),
                (2, 4, d),
                (3, 3, 1.0),
                (4, 1, -d),
                (4, 5, -d),
                (5, 1, -d),
                (5, 5, d),
            ]),
            kind: SymmetryKind::FrameY0,
        }
    }

    pub fn apply(&self, s: &RegularizedState) -> RegularizedState {
        self.entries * s
    }

    pub fn transpose(&self) -> Matrix6<f64> {
        self.entries.transpose()
    }
}

pub fn apply_symmetry(m: &SymmetryMatrix, s: &RegularizedState) -> RegularizedState {
    m.apply(s)
}

/// Residuals of every algebraic identity the symmetry matrices must satisfy.
///
/// Takes the matrices explicitly so that callers can audit substitutes.
pub fn identity_residuals(
    sf: &Matrix6<f64>,
    sr: &Matrix6<f64>,
    y0: &Matrix6<f64>,
) -> Vec<(&'static str, f64)> {
    let id = Matrix6::identity();
    let j = symplectic_j();
    let lambda = SymmetryMatrix::lambda().entries;
    let e1 = Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    vec![
        ("S_f orthogonal", max_abs(&(sf.transpose() * sf - id))),
        ("S_f^6 = I", max_abs(&(sf.pow(6) - id))),
        ("S_f J = J S_f", max_abs(&(sf * j - j * sf))),
        ("S_r symmetric", max_abs(&(sr - sr.transpose()))),
        ("S_r orthogonal", max_abs(&(sr.transpose() * sr - id))),
        ("S_r^2 = I", max_abs(&(sr * sr - id))),
        ("S_r J = -J S_r", max_abs(&(sr * j + j * sr))),
        ("Lambda^2 = I", max_abs(&(lambda * lambda - id))),
        ("Y0 orthogonal", max_abs(&(y0.transpose() * y0 - id))),
        ("Y0 symplectic", max_abs(&(y0.transpose() * j * y0 - j))),
        (
            "-Y0^T S_f^T S_r Y0 = Lambda",
            max_abs(&(-(y0.transpose() * sf.transpose() * sr * y0) - lambda)),
        ),
        ("Y0^T e1 = e1", (y0.transpose() * e1 - e1).amax()),
    ]
}

/// For a signed permutation `m`, the axis that a `Q_axis = 0` plane is carried to and the sign.
fn mapped_axis(m: &Matrix6<f64>, axis: usize) -> Option<(usize, f64)> {
    (0..3)
        .find(|&row| m[(row, axis - 1)] != 0.0)
        .map(|row| (row + 1, m[(row, axis - 1)].signum()))
}

/// Assembles `[0, 12τ]` from a segment on `[0, 2τ]` via `γ(s + 2kτ) = S_fᵏ γ(s)`.
pub fn extend_segment(seg: &Trajectory) -> Result<Trajectory> {
    extend_segment_with(seg, &SymmetryMatrix::time_preserving().entries)
}

pub fn extend_segment_with(seg: &Trajectory, sf: &Matrix6<f64>) -> Result<Trajectory> {
    let (start, two_tau) = seg.span();
    if !seg.is_dense() || start.abs() > 0.0 || !(two_tau > 0.0) {
        return Err(Error::Coverage {
            start,
            end: two_tau,
            required: two_tau.max(0.0),
        });
    }
    let origin = seg.samples()[0].1;
    let Some(axis0) = (0..3).find(|&a| origin[a] == 0.0).map(|a| a + 1) else {
        return Err(Error::Coverage {
            start,
            end: two_tau,
            required: two_tau,
        });
    };
    let sign0 = origin[axis0 + 2].signum();

    let mut steps: Vec<DenseStep<6>> = Vec::with_capacity(seg.steps().len() * 6);
    let mut events = Vec::with_capacity(6);
    let mut power = Matrix6::identity();
    for k in 0..6 {
        let shift = 2.0 * k as f64 * (two_tau / 2.0);
        steps.extend(seg.steps().iter().map(|st| st.mapped(&power, shift)));
        let (axis, sign) = mapped_axis(&power, axis0).unwrap_or((axis0, 1.0));
        events.push(EventRecord {
            s: shift,
            axis,
            state: power * origin,
            crossing_sign: (sign * sign0) as i8,
        });
        power = sf * power;
    }
    Ok(Trajectory::from_steps(steps, events))
}

/// A located orbit with its fundamental segment and full period.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub solution: OrbitSolution,
    pub segment: Trajectory,
    pub full: Trajectory,
}

impl PeriodicOrbit {
    /// Full period assembled from `[0, 2τ]` by symmetry.
    pub fn extended(solution: OrbitSolution, cfg: &IntegratorConfig) -> Result<Self> {
        let segment = integrate(
            solution.initial_state(),
            solution.energy,
            (0.0, 2.0 * solution.tau),
            cfg,
        )?;
        let full = extend_segment(&segment)?;
        Ok(Self {
            solution,
            segment,
            full,
        })
    }

    /// Full period by direct integration over `[0, 12τ]`.
    pub fn integrated(solution: OrbitSolution, cfg: &IntegratorConfig) -> Result<Self> {
        let full = integrate(
            solution.initial_state(),
            solution.energy,
            (0.0, solution.period()),
            cfg,
        )?;
        let segment = integrate(
            solution.initial_state(),
            solution.energy,
            (0.0, 2.0 * solution.tau),
            cfg,
        )?;
        Ok(Self {
            solution,
            segment,
            full,
        })
    }

    pub fn tau(&self) -> f64 {
        self.solution.tau
    }

    /// `γ(2kτ)` for `k = 0..=6`, read off the full trajectory.
    pub fn waypoints(&self) -> Vec<RegularizedState> {
        let (_, end) = self.full.span();
        (0..=6)
            .map(|k| {
                let s = (2.0 * k as f64 * self.tau()).min(end);
                self.full.interpolate(s).unwrap_or_default()
            })
            .collect()
    }

    /// `max |γ(s + 2τ) − S γ(s)|` over `n` samples of `s ∈ [0, 10τ]`.
    pub fn time_preserving_defect(&self, sf: &Matrix6<f64>, n: usize) -> f64 {
        let two_tau = 2.0 * self.tau();
        let (_, end) = self.full.span();
        crate::integrator::uniform_grid(0.0, (end - two_tau).max(0.0), n)
            .into_iter()
            .filter_map(|s| {
                let a = self.full.interpolate(s)?;
                let b = self.full.interpolate(s + two_tau)?;
                Some((b - sf * a).amax())
            })
            .fold(0.0, f64::max)
    }

    /// `max |γ(2τ − s) − S_r γ(s)|` over `n` samples of `s ∈ [0, 2τ]`.
    pub fn time_reversing_defect(&self, n: usize) -> f64 {
        let sr = SymmetryMatrix::time_reversing();
        let two_tau = 2.0 * self.tau();
        crate::integrator::uniform_grid(0.0, two_tau, n)
            .into_iter()
            .filter_map(|s| {
                let a = self.segment.interpolate(s)?;
                let b = self.segment.interpolate((two_tau - s).max(0.0))?;
                Some((b - sr.apply(&a)).amax())
            })
            .fold(0.0, f64::max)
    }
}

/// Allowed deviation of collision times from `2kτ`.
pub const COLLISION_SPACING_TOL: f64 = 1e-6;

/// The six collisions of one period, checked against the pattern axes `1, 2, 3, 1, 2, 3` at
/// `s = 0, 2τ, …, 10τ`.
pub fn collision_sequence(po: &PeriodicOrbit) -> Result<Vec<EventRecord>> {
    let tau = po.tau();
    let mut events: Vec<EventRecord> = Vec::new();
    let (s0, start) = po.full.samples()[0];
    let starts_in_collision = po.full.events().first().is_none_or(|e| e.s > s0);
    if starts_in_collision {
        if let Some(axis) = (0..3).find(|&a| start[a].abs() <= crate::dynamics::COLLISION_TOL) {
            events.push(EventRecord {
                s: s0,
                axis: axis + 1,
                state: start,
                crossing_sign: if start[axis + 3] >= 0.0 { 1 } else { -1 },
            });
        }
    }
    // Crossings near 12τ begin the next period.
    events.extend(po.full.events().iter().filter(|e| e.s < 11.0 * tau).copied());

    if events.len() != 6 {
        return Err(Error::PatternMismatch(format!(
            "expected 6 collisions per period, found {}",
            events.len()
        )));
    }
    for (k, ev) in events.iter().enumerate() {
        let axis = k % 3 + 1;
        if ev.axis != axis {
            return Err(Error::PatternMismatch(format!(
                "collision {k} on axis {} instead of {axis}",
                ev.axis
            )));
        }
        let expected = 2.0 * k as f64 * tau;
        if (ev.s - expected).abs() > COLLISION_SPACING_TOL {
            return Err(Error::PatternMismatch(format!(
                "collision {k} at s = {} instead of {expected}",
                ev.s
            )));
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{initial_condition, midpoint_target};

    #[test]
    fn identities_hold_exactly_for_the_tables() {
        let r = identity_residuals(
            &SymmetryMatrix::time_preserving().entries,
            &SymmetryMatrix::time_reversing().entries,
            &SymmetryMatrix::frame_y0().entries,
        );
        for (name, v) in r {
            assert!(v <= 1e-15, "{name}: {v:e}");
        }
    }

    #[test]
    fn transposed_sf_breaks_the_lambda_identity() {
        let r = identity_residuals(
            &SymmetryMatrix::time_preserving().transpose(),
            &SymmetryMatrix::time_reversing().entries,
            &SymmetryMatrix::frame_y0().entries,
        );
        let lam = r.iter().find(|x| x.0.starts_with("-Y0")).unwrap().1;
        assert!(lam > 0.5);
    }

    #[test]
    fn sf_maps_start_to_midpoint() {
        let (a, b) = (3.1, 0.67);
        let sf = SymmetryMatrix::time_preserving();
        assert_eq!(apply_symmetry(&sf, &initial_condition(a, b)), midpoint_target(a, b));
        let sr = SymmetryMatrix::time_reversing();
        assert_eq!(sr.apply(&initial_condition(a, b)), midpoint_target(a, b));
    }

    #[test]
    fn sr_fixes_the_quarter_point_form() {
        let v = Vector6::new(1.3, 1.3, 0.4, 0.8, -0.8, 0.0);
        assert_eq!(SymmetryMatrix::time_reversing().apply(&v), v);
    }

    #[test]
    fn lambda_negates_momenta() {
        let v = Vector6::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        assert_eq!(
            SymmetryMatrix::lambda().apply(&v),
            Vector6::new(1.0, 2.0, 3.0, -4.0, -5.0, -6.0)
        );
    }

    #[test]
    fn sf_powers_walk_the_waypoints() {
        let (a, b) = (3.1, 0.67);
        let r2 = std::f64::consts::SQRT_2;
        let sf = SymmetryMatrix::time_preserving().entries;
        let g0 = initial_condition(a, b);
        let expected = [
            Vector6::new(a, 0.0, a, b, -r2, -b),
            Vector6::new(a, -a, 0.0, -b, -b, -r2),
            Vector6::new(0.0, -a, -a, -r2, b, -b),
            Vector6::new(-a, 0.0, -a, -b, r2, b),
            Vector6::new(-a, a, 0.0, b, b, r2),
            g0,
        ];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(sf.pow(k as u32 + 1) * g0, *e, "k = {}", k + 1);
        }
    }

    #[test]
    fn event_axes_follow_the_rotation() {
        let sf = SymmetryMatrix::time_preserving().entries;
        assert_eq!(mapped_axis(&sf, 1), Some((2, -1.0)));
        assert_eq!(mapped_axis(&sf, 2), Some((3, 1.0)));
        assert_eq!(mapped_axis(&sf, 3), Some((1, 1.0)));
    }

    #[test]
    fn extension_requires_a_segment_from_zero() {
        let t = Trajectory::point(0.0, Vector6::zeros());
        assert!(matches!(extend_segment(&t), Err(Error::Coverage { .. })));
    }
}
