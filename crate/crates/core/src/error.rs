use thiserror::Error;

/// Errors raised by the orbit toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two or more regularized coordinates vanished together; the field is singular there.
    #[error("higher-order collision: potential denominator {denominator:e} below guard")]
    HigherOrderCollision { denominator: f64 },

    /// Physical coordinates are undefined while a body pair is in collision.
    #[error("collision on axis {axis}: |Q| = {magnitude:e} below tolerance")]
    Collision { axis: usize, magnitude: f64 },

    #[error("integration budget of {max_steps} steps exhausted at s = {s}")]
    IntegrationBudget { max_steps: usize, s: f64 },

    #[error("integration diverged at s = {s}")]
    Divergence { s: f64 },

    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepUnderflow { s: f64, h: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("minimizer did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("all {starts} shooting starts failed (best residual {best_residual:e})")]
    AllStartsFailed { starts: usize, best_residual: f64 },

    #[error("trajectory covers [{start}, {end}] but [0, {required}] is needed")]
    Coverage { start: f64, end: f64, required: f64 },

    #[error("collision pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("matrix is not symplectic: defect {defect:e}")]
    NotSymplectic { defect: f64 },

    #[error("W lacks the block structure: off-diagonal residual {residual:e}")]
    Structure { residual: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
