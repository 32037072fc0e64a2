use sps_core::fault::partition;
use sps_core::fixtures;
use sps_core::model::{Bus, ShipScenario};
use sps_core::oracle::{certify_p3_feasible, enumerate_solve, max_distance_bisection, DEFAULT_LIMIT};
use sps_core::par::Execution;
use sps_core::problem::build;
use sps_core::SpsError;

fn exec() -> Execution {
    Execution::default()
}

/// One large generator and light service load: sailing is limited only by
/// the speed cap.
fn roomy(distance: f64) -> ShipScenario {
    let mut s = fixtures::minimal(&[0.5, 0.5]);
    let g = &mut s.generators[0];
    g.p_max = 20.0;
    g.ramp_max = 20.0;
    g.p_min = 0.5;
    g.initial_power = 0.5;
    s.voyage.eeoi_max = 1e6;
    s.voyage.distance = distance;
    s
}

#[test]
fn forced_commitment_costs_fuel_and_storage() {
    let mut s = fixtures::minimal(&[4.0]);
    s.esms.push(fixtures::esm("E1", 0, Bus::Port));
    s.esms[0].p_min = 0.0;
    s.esms[0].p_max = 0.0;
    s.voyage.eeoi_max = 1e6;
    let inst = build(&s, &partition(&s).unwrap()).unwrap();
    let sol = enumerate_solve(&inst, DEFAULT_LIMIT, exec()).unwrap();
    assert_eq!(sol.assignment.delta, vec![vec![1]]);
    let g = &s.generators[0];
    let expect = g.fuel_cost(4.0, 1.0, 1.0) + s.penalties.xi_e * s.esms[0].lc_c;
    assert!((sol.objective - expect).abs() < 1e-6 * expect, "{} vs {expect}", sol.objective);
}

#[test]
fn minimum_on_time_filters_assignments() {
    let mut s = fixtures::minimal(&[0.0, 0.0]);
    s.generators[0].t_min_on = 2;
    s.generators[0].initial_on = false;
    s.generators[0].initial_power = 0.0;
    let inst = build(&s, &partition(&s).unwrap()).unwrap();
    let sol = enumerate_solve(&inst, DEFAULT_LIMIT, exec()).unwrap();
    // (0,0), (0,1), (1,1) remain; (1,0) breaks the minimum on-time.
    assert_eq!(sol.evaluated, 3);
}

#[test]
fn oversized_instances_are_refused() {
    let s = fixtures::case1(120.0);
    let inst = build(&s, &partition(&s).unwrap()).unwrap();
    match enumerate_solve(&inst, DEFAULT_LIMIT, exec()) {
        Err(SpsError::TooLarge { binaries: 50, limit: 20 }) => {}
        other => panic!("{:?}", other.map(|o| o.objective)),
    }
}

#[test]
fn certification_flips_at_the_kinematic_limit() {
    let s = roomy(0.0);
    let part = partition(&s).unwrap();
    assert!(certify_p3_feasible(&s, &part, DEFAULT_LIMIT, exec()).unwrap());
    let reach = 2.0 * s.propulsion.v_max;
    assert!(certify_p3_feasible(&s.with_distance(reach - 1.0), &part, DEFAULT_LIMIT, exec()).unwrap());
    assert!(!certify_p3_feasible(&s.with_distance(reach + 1.0), &part, DEFAULT_LIMIT, exec()).unwrap());
}

#[test]
fn unconstrained_sailing_reaches_full_speed_distance() {
    let s = roomy(10.0);
    let d = max_distance_bisection(&s, &partition(&s).unwrap(), 0.1, DEFAULT_LIMIT, exec()).unwrap();
    assert!((d - 2.0 * s.propulsion.v_max).abs() <= 0.1, "{d}");
}

#[test]
fn no_headroom_means_no_distance() {
    let mut s = fixtures::minimal(&[8.0, 8.0]);
    s.voyage.eeoi_max = 1e6;
    s.voyage.distance = 10.0;
    let d = max_distance_bisection(&s, &partition(&s).unwrap(), 0.1, DEFAULT_LIMIT, exec()).unwrap();
    assert!(d <= 0.1, "{d}");
}

#[test]
fn reach_falls_between_the_bounds_when_power_limits_speed() {
    let mut s = roomy(10.0);
    s.generators[0].p_max = 4.0;
    s.generators[0].ramp_max = 4.0;
    let part = partition(&s).unwrap();
    let d = max_distance_bisection(&s, &part, 0.1, DEFAULT_LIMIT, exec()).unwrap();
    let v = s.propulsion.speed_at(3.5);
    assert!((d - 2.0 * v).abs() <= 0.1, "{d} vs {}", 2.0 * v);
    assert!(certify_p3_feasible(&s.with_distance(d - 0.2), &part, DEFAULT_LIMIT, exec()).unwrap());
    assert!(!certify_p3_feasible(&s.with_distance(d + 0.2), &part, DEFAULT_LIMIT, exec()).unwrap());
}
