//! Construction and analysis of the eight-body cubic collision orbit.
//!
//! Eight unit masses at the vertices of an axis-aligned box undergo
//! simultaneous binary collisions in the three coordinate planes in turn. The
//! crate regularizes the collisions, finds the periodic orbit by shooting,
//! reduces its monodromy matrix with the orbit's symmetries to decide linear
//! stability, and measures how perturbed orbits shadow it.
//!
//! Module map:
//! - [`dynamics`]: the regularized Hamiltonian Γ with analytic gradient and Hessian
//! - [`integrator`]: adaptive Dormand–Prince 5(4) with crossing detection
//! - [`shooting`]: the (α, β) shooting problem and its midpoint check
//! - [`orbit`]: symmetry matrices and the periodic-orbit assembly
//! - [`variational`]: the linearized flow along the orbit
//! - [`stability`]: reduction to the 3×3 block `K` and the stability verdict
//! - [`sweep`]: the perturbation grid
//! - [`verify`]: the invariant battery, with fault injection for mutation checks

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
mod error;
pub mod integrator;
pub mod linalg;
pub mod orbit;
pub mod shooting;
pub mod stability;
pub mod sweep;
pub mod variational;
pub mod verify;

pub use dynamics::{EnergyLevel, PhysicalState, RegularizedState};
pub use error::{Error, Result};
pub use integrator::{EventRecord, IntegratorConfig, Trajectory};
pub use orbit::{PeriodicOrbit, SymmetryKind, SymmetryMatrix};
pub use shooting::{OrbitSolution, SearchConfig};
pub use stability::{StabilityReport, Verdict};
pub use sweep::{SweepConfig, SweepOutcome, SweepRecord, SweepSummaryRow};
pub use variational::VariationalMatrix;
