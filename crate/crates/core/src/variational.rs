//! Linearized flow `Y' = J D²Γ(γ(s)) Y` integrated alongside the orbit.
//!
//! The orbit and the 36 matrix entries form one 42-component state so that both
//! share the adaptive step sequence and the Hessian is always evaluated on the
//! integrated orbit point.

use nalgebra::{Matrix6, SVector};

use crate::dynamics::{self, EnergyLevel, RegularizedState};
use crate::error::Result;
use crate::integrator::{propagate, IntegratorConfig, OdeSystem};
use crate::linalg::symplectic_j;
use crate::orbit::SymmetryMatrix;
use crate::shooting::OrbitSolution;

/// Fundamental matrix solution at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalMatrix {
    pub s: f64,
    /// Orbit point at `s`.
    pub state: RegularizedState,
    pub y: Matrix6<f64>,
}

type Coupled = SVector<f64, 42>;

struct CoupledFlow<H> {
    energy: EnergyLevel,
    hessian: H,
    j: Matrix6<f64>,
}

impl<H> OdeSystem<42> for CoupledFlow<H>
where
    H: Fn(&RegularizedState, EnergyLevel) -> Result<Matrix6<f64>>,
{
    fn rhs(&self, y: &Coupled) -> Result<Coupled> {
        let z: RegularizedState = y.fixed_rows::<6>(0).into_owned();
        let f = dynamics::vector_field(&z, self.energy)?;
        let h = (self.hessian)(&z, self.energy)?;
        let m = Matrix6::from_column_slice(&y.as_slice()[6..]);
        let dm = self.j * h * m;
        let mut out = Coupled::zeros();
        out.fixed_rows_mut::<6>(0).copy_from(&f);
        out.as_mut_slice()[6..].copy_from_slice(dm.as_slice());
        Ok(out)
    }
}

fn pack(z: &RegularizedState, m: &Matrix6<f64>) -> Coupled {
    let mut y = Coupled::zeros();
    y.fixed_rows_mut::<6>(0).copy_from(z);
    y.as_mut_slice()[6..].copy_from_slice(m.as_slice());
    y
}

fn unpack(s: f64, y: &Coupled) -> VariationalMatrix {
    VariationalMatrix {
        s,
        state: y.fixed_rows::<6>(0).into_owned(),
        y: Matrix6::from_column_slice(&y.as_slice()[6..]),
    }
}

/// Fundamental matrices at each of `points`, starting from `(g0, y0)` at `s0`.
///
/// `hessian` supplies `D²Γ`; pass [`dynamics::hessian`] for the analytic one.
pub fn variational_path_with<H>(
    hessian: H,
    g0: &RegularizedState,
    y0: &Matrix6<f64>,
    energy: EnergyLevel,
    s0: f64,
    points: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<VariationalMatrix>>
where
    H: Fn(&RegularizedState, EnergyLevel) -> Result<Matrix6<f64>>,
{
    let flow = CoupledFlow {
        energy,
        hessian,
        j: symplectic_j(),
    };
    let start = pack(g0, y0);
    let mut out = Vec::with_capacity(points.len());
    let mut cursor = 0;
    // Points equal to `s0` need no integration.
    while cursor < points.len() && points[cursor] == s0 {
        out.push(unpack(s0, &start));
        cursor += 1;
    }
    if cursor < points.len() {
        let states = propagate(&flow, s0, start, &points[cursor..], cfg)?;
        out.extend(points[cursor..].iter().zip(states.iter()).map(|(&s, y)| unpack(s, y)));
    }
    Ok(out)
}

pub fn variational_path(
    g0: &RegularizedState,
    y0: &Matrix6<f64>,
    energy: EnergyLevel,
    s0: f64,
    points: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<VariationalMatrix>> {
    variational_path_with(dynamics::hessian, g0, y0, energy, s0, points, cfg)
}

/// `Y(span.1)` for `Y(span.0) = y0` along the orbit through `g0`.
pub fn integrate_variational(
    g0: &RegularizedState,
    y0: &Matrix6<f64>,
    energy: EnergyLevel,
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<VariationalMatrix> {
    let mut path = variational_path(g0, y0, energy, span.0, &[span.1], cfg)?;
    Ok(path.remove(0))
}

/// `X(s)` with `X(0) = I` along the orbit of `sol`.
pub fn fundamental_matrix(
    sol: &OrbitSolution,
    points: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<Matrix6<f64>>> {
    variational_path(
        &sol.initial_state(),
        &Matrix6::identity(),
        sol.energy,
        0.0,
        points,
        cfg,
    )
    .map(|v| v.into_iter().map(|m| m.y).collect())
}

/// `B = Y(τ)` with `Y(0) = Y₀`.
pub fn compute_b(sol: &OrbitSolution, cfg: &IntegratorConfig) -> Result<Matrix6<f64>> {
    compute_b_with(dynamics::hessian, sol, cfg)
}

pub fn compute_b_with<H>(hessian: H, sol: &OrbitSolution, cfg: &IntegratorConfig) -> Result<Matrix6<f64>>
where
    H: Fn(&RegularizedState, EnergyLevel) -> Result<Matrix6<f64>>,
{
    let y0 = SymmetryMatrix::frame_y0().entries;
    let path = variational_path_with(
        hessian,
        &sol.initial_state(),
        &y0,
        sol.energy,
        0.0,
        &[sol.tau],
        cfg,
    )?;
    Ok(path[0].y)
}
