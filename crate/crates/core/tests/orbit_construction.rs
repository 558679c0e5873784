mod common;

use cubic_orbit::integrator::{integrate, integrate_to_event, propagate, RegularizedFlow};
use cubic_orbit::orbit::{collision_sequence, extend_segment, PeriodicOrbit};
use cubic_orbit::shooting::{
    find_orbit, midpoint_check, midpoint_target, residual, shoot, verify_midpoint,
};
use cubic_orbit::{EnergyLevel, Error, IntegratorConfig, OrbitSolution, SearchConfig, SymmetryMatrix};
use proptest::prelude::*;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

#[test]
fn found_orbit_meets_search_tolerances() {
    let sol = common::orbit();
    assert!(sol.alpha > 0.0 && sol.tau > 0.0);
    assert!(sol.residual <= 1e-9, "residual {:e}", sol.residual);
    assert!(sol.midpoint_residual <= 1e-6);
    println!("alpha = {:.12}, beta = {:.12}, 12tau = {:.10}", sol.alpha, sol.beta, sol.period());
}

#[test]
fn reference_digits_sit_close_to_the_refined_root() {
    // Six-digit values: the refined root is ~2e-4 away, so their residual is small but not tiny.
    let (r, six_tau) = residual(3.100685, 0.668162, EnergyLevel(-1.0), &cfg());
    assert!(r < 1e-3, "residual {r:e}");
    assert!((six_tau - 0.124736 / 2.0).abs() < 1e-5);
    let sol = common::orbit();
    assert!((sol.alpha - 3.100685).abs() < 1e-3);
    assert!((sol.beta - 0.668162).abs() < 1e-3);
}

#[test]
fn shot_returns_negated_start_at_half_period() {
    let sol = common::orbit();
    let shot = shoot(sol.alpha, sol.beta, sol.energy, &cfg()).unwrap();
    assert!((shot.end_state + sol.initial_state()).amax() < 1e-6);
    assert!((shot.six_tau - 6.0 * sol.tau).abs() < 1e-15);
}

#[test]
fn midpoint_event_is_a_third_of_the_half_period() {
    let sol = common::orbit();
    let check = midpoint_check(sol, &cfg()).unwrap();
    assert!(check.residual <= 1e-6);
    assert!((check.event_s - 2.0 * sol.tau).abs() < 1e-6);
}

#[test]
fn wrong_alpha_fails_midpoint() {
    let sol = OrbitSolution {
        alpha: common::orbit().alpha + 0.1,
        ..*common::orbit()
    };
    assert!(verify_midpoint(&sol, &cfg()).unwrap() > 1e-2);
}

#[test]
fn energy_scaling_maps_solutions() {
    // E → E/c rescales Q by √c, keeps P, and stretches s by c^{-3/2}; here c = 1/2.
    let base = common::orbit();
    let sol = find_orbit(EnergyLevel(-2.0), &SearchConfig::default(), &cfg()).unwrap();
    assert!(sol.residual <= 1e-9);
    assert!((sol.alpha * 2f64.sqrt() - base.alpha).abs() < 1e-7, "{} vs {}", sol.alpha, base.alpha);
    assert!((sol.beta - base.beta).abs() < 1e-7);
    assert!((sol.tau / (2.0 * SQRT2) - base.tau).abs() < 1e-10);
}

#[test]
fn search_is_deterministic_and_rejects_unbound_energy() {
    let a = find_orbit(EnergyLevel(-1.0), &SearchConfig::default(), &cfg()).unwrap();
    assert_eq!(&a, common::orbit());
    for e in [0.0, 1.0] {
        assert!(matches!(
            find_orbit(EnergyLevel(e), &SearchConfig::default(), &cfg()),
            Err(Error::InvalidConfig(_))
        ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn residual_is_a_norm(alpha in 2.5f64..3.6, beta in 0.4f64..0.9) {
        let (r, s) = residual(alpha, beta, EnergyLevel(-1.0), &cfg());
        prop_assert!(r >= 0.0);
        prop_assert!(r.is_infinite() || s > 0.0);
    }
}

#[test]
fn forward_then_backward_returns_home() {
    let sol = common::orbit();
    let flow = RegularizedFlow { energy: sol.energy };
    let s0 = sol.initial_state();
    let fwd = propagate(&flow, 0.0, s0, &[0.05], &cfg()).unwrap();
    let back = propagate(&flow, 0.05, fwd[0], &[0.0], &cfg()).unwrap();
    assert!((back[0] - s0).amax() < 1e-9);
}

#[test]
fn integration_is_bitwise_deterministic() {
    let sol = common::orbit();
    let a = integrate(sol.initial_state(), sol.energy, (0.0, sol.period()), &cfg()).unwrap();
    let b = integrate(sol.initial_state(), sol.energy, (0.0, sol.period()), &cfg()).unwrap();
    assert_eq!(a.samples(), b.samples());
    assert_eq!(a.events(), b.events());
}

#[test]
fn one_period_returns_to_start() {
    let sol = common::orbit();
    let traj = integrate(sol.initial_state(), sol.energy, (0.0, sol.period()), &cfg()).unwrap();
    assert!((traj.final_state() - sol.initial_state()).norm() <= 1e-6);
}

#[test]
fn event_pattern_over_one_period() {
    let sol = common::orbit();
    let end = sol.period() - 0.5 * sol.tau;
    let traj = integrate(sol.initial_state(), sol.energy, (0.0, end), &cfg()).unwrap();
    let events = traj.events();
    // The start collision at s = 0 is excluded; the other five follow every 2τ.
    let axes: Vec<usize> = events.iter().map(|e| e.axis).collect();
    assert_eq!(axes, vec![2, 3, 1, 2, 3]);
    assert_eq!(events.iter().filter(|e| e.axis == 1).count(), 1);
    for (k, ev) in events.iter().enumerate() {
        assert!((ev.s - 2.0 * (k + 1) as f64 * sol.tau).abs() < 1e-6);
        let i = ev.axis - 1;
        assert!(ev.state[i].abs() <= cfg().event_tol);
        assert!((ev.state[i + 3].abs() - SQRT2).abs() < 1e-6, "P at collision {}", ev.state[i + 3]);
        assert_ne!(ev.crossing_sign, 0);
        // Q changes sign across the event while P keeps its sign.
        let before = traj.interpolate(ev.s - 1e-4).unwrap();
        let after = traj.interpolate(ev.s + 1e-4).unwrap();
        assert!(before[i] * after[i] < 0.0);
        assert!(before[i + 3] * after[i + 3] > 0.0);
        assert_eq!((after[i] - before[i]).signum() as i8, ev.crossing_sign);
    }
}

#[test]
fn first_events_on_each_axis() {
    let sol = common::orbit();
    let (state, s) = integrate_to_event(sol.initial_state(), sol.energy, 1, 1, &cfg()).unwrap();
    assert!((s - 0.124736 / 2.0).abs() < 1e-5);
    assert!((state + sol.initial_state()).amax() < 1e-6);
    let (state, s) = integrate_to_event(sol.initial_state(), sol.energy, 2, 1, &cfg()).unwrap();
    assert!((s - 0.124736 / 6.0).abs() < 1e-5);
    assert!((state - midpoint_target(sol.alpha, sol.beta)).amax() < 1e-6);
}

#[test]
fn no_crossing_exhausts_budget() {
    let (s, e) = common::equilibrium();
    let tight = IntegratorConfig {
        max_steps: 2_000,
        ..cfg()
    };
    assert!(matches!(
        integrate_to_event(s, e, 1, 1, &tight),
        Err(Error::IntegrationBudget { .. })
    ));
}

#[test]
fn waypoints_follow_the_collision_table() {
    let sol = common::orbit();
    let table = common::waypoint_table(sol.alpha, sol.beta);
    for po in [
        PeriodicOrbit::extended(*sol, &cfg()).unwrap(),
        PeriodicOrbit::integrated(*sol, &cfg()).unwrap(),
    ] {
        for (k, (got, want)) in po.waypoints().iter().zip(table.iter()).enumerate() {
            assert!((got - want).amax() <= 1e-6, "k = {k}: {got} vs {want}");
        }
    }
}

#[test]
fn extension_agrees_with_direct_integration() {
    let sol = common::orbit();
    let ext = PeriodicOrbit::extended(*sol, &cfg()).unwrap();
    let direct = PeriodicOrbit::integrated(*sol, &cfg()).unwrap();
    let mut worst: f64 = 0.0;
    for (s, y) in direct.full.resample(600) {
        worst = worst.max((ext.full.interpolate(s).unwrap() - y).amax());
    }
    assert!(worst <= 1e-6, "max deviation {worst:e}");
    let (a, b) = ext.full.span();
    assert_eq!(a, 0.0);
    assert!((b - sol.period()).abs() < 1e-15);
}

#[test]
fn symmetry_relations_hold_on_the_orbit() {
    let sol = common::orbit();
    let po = PeriodicOrbit::integrated(*sol, &cfg()).unwrap();
    let sf = SymmetryMatrix::time_preserving().entries;
    assert!(po.time_preserving_defect(&sf, 500) <= 1e-7);
    assert!(po.time_reversing_defect(500) <= 1e-7);
    // γ(τ) has the form (a, a, b, c, -c, 0) and is fixed by S_r.
    let g = po.full.interpolate(sol.tau).unwrap();
    assert!((g[0] - g[1]).abs() < 1e-7 && (g[3] + g[4]).abs() < 1e-7 && g[5].abs() < 1e-7);
    assert!((SymmetryMatrix::time_reversing().apply(&g) - g).amax() < 1e-7);
}

#[test]
fn collision_sequence_of_the_orbit() {
    let sol = common::orbit();
    let po = PeriodicOrbit::extended(*sol, &cfg()).unwrap();
    let seq = collision_sequence(&po).unwrap();
    assert_eq!(seq.iter().map(|e| e.axis).collect::<Vec<_>>(), vec![1, 2, 3, 1, 2, 3]);
    for w in seq.windows(2) {
        assert!((w[1].s - w[0].s - 2.0 * sol.tau).abs() <= 1e-6);
    }
    assert!((seq[0].state + seq[3].state).amax() <= 1e-6);
}

#[test]
fn perturbed_orbit_breaks_collision_sequence() {
    let base = common::orbit();
    let sol = OrbitSolution {
        alpha: base.alpha + 0.1,
        ..*base
    };
    let po = PeriodicOrbit::integrated(sol, &cfg()).unwrap();
    assert!(matches!(collision_sequence(&po), Err(Error::PatternMismatch(_))));
}

#[test]
fn extension_needs_segment_from_zero() {
    let sol = common::orbit();
    let seg = integrate(sol.initial_state(), sol.energy, (0.001, 0.002), &cfg()).unwrap();
    assert!(matches!(extend_segment(&seg), Err(Error::Coverage { .. })));
}
