//! Shared fixtures for the benchmarks.

use std::sync::OnceLock;

use cubic_orbit::shooting::find_orbit;
use cubic_orbit::{EnergyLevel, IntegratorConfig, OrbitSolution, RegularizedState, SearchConfig};

/// The E = −1 orbit, solved once per process.
pub fn orbit() -> &'static OrbitSolution {
    static ORBIT: OnceLock<OrbitSolution> = OnceLock::new();
    ORBIT.get_or_init(|| {
        find_orbit(EnergyLevel(-1.0), &SearchConfig::default(), &IntegratorConfig::default())
            .expect("reference orbit")
    })
}

/// A fixed generic state away from every collision plane.
pub fn generic_state() -> RegularizedState {
    RegularizedState::new(0.9, 1.7, 2.3, 0.4, -1.1, 0.6)
}
