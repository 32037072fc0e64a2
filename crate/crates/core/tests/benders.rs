use sps_core::benders::{run, BendersConfig};
use sps_core::fault::partition;
use sps_core::fixtures::{self, RandomMode};
use sps_core::model::{Bus, ShipScenario};
use sps_core::oracle::{enumerate_solve, DEFAULT_LIMIT};
use sps_core::par::Execution;
use sps_core::problem::{build, ProblemInstance};
use sps_core::verify::verify;

fn instance(s: &ShipScenario) -> ProblemInstance {
    build(s, &partition(s).unwrap()).unwrap()
}

fn monotone(up: &[f64], lo: &[f64]) -> bool {
    up.windows(2).all(|w| w[1] <= w[0]) && lo.windows(2).all(|w| w[1] >= w[0])
}

#[test]
fn storage_only_instance_converges_in_two_iterations() {
    let mut s = fixtures::minimal(&[0.3, 0.3]);
    s.esms.push(fixtures::esm("E1", 0, Bus::Port));
    s.faults.failed_generators = vec!["G1".into()];
    s.voyage.eeoi_max = 1e6;
    let inst = instance(&s);
    assert_eq!(inst.free_binaries(), 0);
    let (sched, rep) = run(&inst, &BendersConfig::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations <= 2, "{}", rep.iterations);
    assert!(verify(&s, &inst.partition, &sched, 1e-6).unwrap().passed());
}

#[test]
fn desk_scale_instances_match_the_oracle() {
    let mut feasible = 0;
    for seed in 0..10 {
        let mode = RandomMode::ALL[seed as usize % RandomMode::ALL.len()];
        let s = fixtures::random_small(100 + seed, mode, 0.7);
        let inst = instance(&s);
        let oracle = enumerate_solve(&inst, DEFAULT_LIMIT, Execution::default());
        let (sched, rep) = match (run(&inst, &BendersConfig::default()), oracle) {
            (Ok(found), Ok(oracle)) => {
                let rel = (found.1.cost.total - oracle.objective).abs() / oracle.objective.abs().max(1.0);
                assert!(rel <= 1e-3, "seed {seed}: {} vs {}", found.1.cost.total, oracle.objective);
                found
            }
            // Structurally infeasible: both must say so.
            (Err(_), Err(_)) => continue,
            (a, b) => panic!("seed {seed}: {:?} vs {:?}", a.map(|r| r.1.cost), b.map(|o| o.objective)),
        };
        assert!(monotone(&rep.upper_bounds, &rep.lower_bounds), "seed {seed}");
        let check = verify(&s, &inst.partition, &sched, 1e-6).unwrap();
        assert!(check.passed(), "seed {seed}\n{}", check.table());
        feasible += 1;
    }
    assert!(feasible >= 8, "{feasible}");
}

#[test]
fn reported_cost_matches_the_final_upper_bound() {
    let s = fixtures::random_small(5, RandomMode::SemiIsland, 0.6);
    let inst = instance(&s);
    let (_, rep) = run(&inst, &BendersConfig::default()).unwrap();
    let upper = *rep.upper_bounds.last().unwrap();
    assert!((rep.cost.total - upper).abs() <= 1e-6 * upper.abs().max(1.0), "{} vs {upper}", rep.cost.total);
}

#[test]
fn iteration_cap_returns_a_flagged_incumbent() {
    let s = fixtures::random_small(2, RandomMode::Normal, 0.6);
    let inst = instance(&s);
    let cfg = BendersConfig {
        max_iter: 1,
        epsilon: 1e-12,
        ..BendersConfig::default()
    };
    let (_, rep) = run(&inst, &cfg).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 1);
    assert!(!rep.notes.is_empty());
}

#[test]
fn long_voyage_on_the_semi_island_case_sheds_and_falls_short() {
    let s = fixtures::case1(160.0);
    let inst = instance(&s);
    let (sched, rep) = run(&inst, &BendersConfig::default()).unwrap();
    assert!(rep.converged, "{:?}", rep.notes);
    assert!(rep.d_d > 0.0, "D_d = {}", rep.d_d);
    assert!(rep.p_ls_total > 0.0, "P_LS = {}", rep.p_ls_total);
    let check = verify(&s, &inst.partition, &sched, 1e-6).unwrap();
    assert!(check.passed(), "{}", check.table());
    eprintln!("case1 D=160: {} iterations, {:.2}s", rep.iterations, rep.wall_time_s);
}
