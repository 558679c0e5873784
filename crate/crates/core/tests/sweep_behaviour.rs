mod common;

use std::f64::consts::PI;

use cubic_orbit::sweep::{
    angle_grid, default_integrator, distance_to_orbit, run_one, run_point, run_sweep, GridPoint,
};
use cubic_orbit::{Error, SweepConfig};
use proptest::prelude::*;

fn small_grid(n_angles: usize, radii: Vec<f64>) -> SweepConfig {
    SweepConfig {
        max_collisions: 40,
        ..SweepConfig::default().with_angles(angle_grid(n_angles)).with_radii(radii)
    }
}

#[test]
fn unperturbed_start_shadows_the_orbit() {
    let sol = common::orbit();
    let (n, d, early) = run_one(&sol.initial_state(), sol, &SweepConfig::default(), &default_integrator());
    assert_eq!(n, 200);
    assert!(!early);
    assert!(d <= 1e-5, "max distance {d:e}");
}

#[test]
fn unstable_example_terminates_early() {
    let sol = common::orbit();
    let p = GridPoint {
        a: PI / 6.0,
        b: PI / 6.0,
        c: 11.0 * PI / 6.0,
        r: 0.030,
    };
    let rec = run_point(p, sol, &SweepConfig::default(), &default_integrator());
    assert!(rec.terminated_early);
    assert!(rec.collisions_reached.abs_diff(34) <= 10, "collisions {}", rec.collisions_reached);
}

#[test]
fn records_independent_of_worker_count() {
    let sol = common::orbit();
    let base = small_grid(2, vec![0.01, 0.005]);
    let one = run_sweep(sol, &SweepConfig { parallelism: 1, ..base.clone() }, &default_integrator()).unwrap();
    let three = run_sweep(sol, &SweepConfig { parallelism: 3, ..base }, &default_integrator()).unwrap();
    assert_eq!(one, three);
    let keys: Vec<_> = one.records.iter().map(|r| (r.r, r.a, r.b, r.c)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(keys, sorted);
    assert_eq!(one.summary.len(), 2);
    assert!(one.summary[0].r < one.summary[1].r);
}

#[test]
fn sub_grid_maximum_is_bounded_by_full_grid() {
    let sol = common::orbit();
    let full = run_sweep(sol, &small_grid(4, vec![0.01]), &default_integrator()).unwrap();
    let sub = run_sweep(sol, &small_grid(2, vec![0.01]), &default_integrator()).unwrap();
    assert!(sub.summary[0].dist_max <= full.summary[0].dist_max);
    for rec in &full.records {
        assert!(rec.collisions_reached <= 40);
        assert!(rec.max_distance >= 0.0);
    }
}

#[test]
fn invalid_grids_are_configuration_errors() {
    let sol = common::orbit();
    for cfg in [
        SweepConfig::default().with_radii(vec![]),
        SweepConfig::default().with_radii(vec![0.0]),
        SweepConfig::default().with_angles(vec![]),
        SweepConfig {
            timeout_span: 0.0,
            ..SweepConfig::default()
        },
    ] {
        assert!(matches!(run_sweep(sol, &cfg, &default_integrator()), Err(Error::InvalidConfig(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_ignores_reference_sign(a in -1.0f64..1.0, b in -1.0f64..1.0, k in 0usize..6) {
        let reference = common::orbit().initial_state();
        let mut x = reference * a;
        x[k] += b;
        prop_assert_eq!(distance_to_orbit(&x, &reference), distance_to_orbit(&x, &(-reference)));
    }

    #[test]
    fn perturbation_has_radius_r(a in 0.0f64..6.3, b in 0.0f64..6.3, c in 0.0f64..6.3, r in 0.0f64..0.1) {
        let sol = common::orbit();
        let d = cubic_orbit::sweep::perturbed_initial(a, b, c, r, sol) - sol.initial_state();
        prop_assert!((d.norm() - r).abs() <= 1e-14);
        prop_assert_eq!(d[0], 0.0);
        prop_assert_eq!(d[3], 0.0);
    }
}
