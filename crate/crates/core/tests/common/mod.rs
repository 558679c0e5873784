#![allow(dead_code)]

use std::sync::OnceLock;

use cubic_orbit::{EnergyLevel, IntegratorConfig, OrbitSolution, SearchConfig};
use nalgebra::Vector6;

pub fn orbit() -> &'static OrbitSolution {
    static ORBIT: OnceLock<OrbitSolution> = OnceLock::new();
    ORBIT.get_or_init(|| {
        cubic_orbit::shooting::find_orbit(
            EnergyLevel(-1.0),
            &SearchConfig::default(),
            &IntegratorConfig::default(),
        )
        .expect("orbit search at E = -1")
    })
}

/// `γ(2kτ)` for `k = 0..=6` written out in terms of `α` and `β`.
pub fn waypoint_table(alpha: f64, beta: f64) -> [Vector6<f64>; 7] {
    let r2 = std::f64::consts::SQRT_2;
    let (a, b) = (alpha, beta);
    [
        Vector6::new(0.0, a, a, r2, -b, b),
        Vector6::new(a, 0.0, a, b, -r2, -b),
        Vector6::new(a, -a, 0.0, -b, -b, -r2),
        Vector6::new(0.0, -a, -a, -r2, b, -b),
        Vector6::new(-a, 0.0, -a, -b, r2, b),
        Vector6::new(-a, a, 0.0, b, b, r2),
        Vector6::new(0.0, a, a, r2, -b, b),
    ]
}

/// The rest point `Q = (1, 1, 1)`, `P = 0` together with the energy that makes it one.
pub fn equilibrium() -> (Vector6<f64>, EnergyLevel) {
    let e = -(8.0 * (1.0 / 3f64.sqrt() + 3.0 / 2f64.sqrt()) + 24.0) / 6.0;
    (Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0), EnergyLevel(e))
}
