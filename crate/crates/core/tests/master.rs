use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sps_core::convex::subproblem::Sensitivities;
use sps_core::fault::partition;
use sps_core::fixtures::{self, RandomMode};
use sps_core::master::{Master, MasterMethod};
use sps_core::model::ShipScenario;
use sps_core::par::Execution;
use sps_core::problem::{build, ProblemInstance};

fn instance(s: &ShipScenario) -> ProblemInstance {
    build(s, &partition(s).unwrap()).unwrap()
}

fn zero_lambda(inst: &ProblemInstance) -> Sensitivities {
    let k = inst.len();
    Sensitivities {
        delta: vec![vec![0.0; k]; inst.scenario.generators.len()],
        s_p: vec![vec![0.0; k]; inst.partition.coupled_zones.len()],
        s_s: vec![vec![0.0; k]; inst.partition.coupled_zones.len()],
    }
}

fn random_lambda(inst: &ProblemInstance, rng: &mut ChaCha8Rng) -> Sensitivities {
    let mut l = zero_lambda(inst);
    for row in l.delta.iter_mut().chain(l.s_p.iter_mut()).chain(l.s_s.iter_mut()) {
        row.iter_mut().for_each(|v| *v = rng.gen_range(-80.0..40.0));
    }
    l
}

#[test]
fn without_cuts_the_master_buys_the_cheapest_cover() {
    let s = fixtures::minimal(&[4.0, 6.0]);
    let inst = instance(&s);
    let m = Master::new(&inst).unwrap();
    let sol = m.solve(Execution::default()).unwrap();
    assert_eq!(sol.assignment.delta, vec![vec![1, 1]]);
    assert_eq!(sol.mu, 0.0);
    let expect = 2.0 * s.generators[0].cost_c * s.dt();
    assert!((sol.objective - expect).abs() < 1e-9);
}

#[test]
fn a_flat_cut_lifts_the_bound_by_its_value() {
    let s = fixtures::minimal(&[4.0, 6.0]);
    let inst = instance(&s);
    let mut m = Master::new(&inst).unwrap();
    let base = m.solve(Execution::default()).unwrap().objective;
    m.add_optimality_cut(123.5, &zero_lambda(&inst), &inst.default_assignment());
    let sol = m.solve(Execution::default()).unwrap();
    assert!((sol.objective - base - 123.5).abs() < 1e-9);
}

#[test]
fn minimum_on_time_holds_in_every_feasible_assignment() {
    let mut s = fixtures::minimal(&[0.0, 0.0, 0.0, 0.0, 0.0]);
    s.generators[0].t_min_on = 3;
    s.generators[0].initial_on = false;
    s.generators[0].initial_power = 0.0;
    let inst = instance(&s);
    let m = Master::new(&inst).unwrap();
    let mut feasible = 0;
    for code in 0u32..32 {
        let x: Vec<u8> = (0..5).map(|i| ((code >> (4 - i)) & 1) as u8).collect();
        let mut prev = 0;
        let mut ok = true;
        for t in 0..5 {
            if x[t] == 1 && prev == 0 {
                ok &= (t..(t + 3).min(5)).all(|u| x[u] == 1);
            }
            prev = x[t];
        }
        assert_eq!(m.feasible(&x), ok, "{x:?}");
        feasible += usize::from(ok);
    }
    assert!(feasible > 1);
}

#[test]
fn no_good_excludes_exactly_one_assignment() {
    let s = fixtures::minimal(&[0.0, 0.0, 0.0]);
    let inst = instance(&s);
    let mut m = Master::new(&inst).unwrap();
    let before: Vec<bool> = (0u8..8).map(|c| m.feasible(&[c >> 2 & 1, c >> 1 & 1, c & 1])).collect();
    let a = m.to_assignment(&[1, 0, 1]);
    m.add_no_good(&a);
    for c in 0u8..8 {
        let x = [c >> 2 & 1, c >> 1 & 1, c & 1];
        let expect = before[c as usize] && x != [1, 0, 1];
        assert_eq!(m.feasible(&x), expect, "{x:?}");
    }
}

#[test]
fn branch_and_bound_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..20 {
        let mode = RandomMode::ALL[seed as usize % RandomMode::ALL.len()];
        let s = fixtures::random_small(seed, mode, 0.6);
        let inst = instance(&s);
        let Ok(mut m) = Master::new(&inst) else {
            continue;
        };
        for _ in 0..4 {
            let at = m.to_assignment(&(0..m.len()).map(|_| rng.gen_range(0..=1)).collect::<Vec<u8>>());
            m.add_optimality_cut(rng.gen_range(50.0..500.0), &random_lambda(&inst, &mut rng), &at);
        }
        let ex = m.solve_with(MasterMethod::Exhaustive, Execution::Sequential);
        let bb = m.solve_with(MasterMethod::BranchAndBound, Execution::Sequential);
        match (ex, bb) {
            (Ok(ex), Ok(bb)) => {
                assert!(
                    (ex.objective - bb.objective).abs() <= 1e-7 * (1.0 + ex.objective.abs()),
                    "seed {seed}: {} vs {}",
                    ex.objective,
                    bb.objective
                );
                assert!(m.feasible(&bb.x));
            }
            (Err(_), Err(_)) => {}
            (ex, bb) => panic!("seed {seed}: {ex:?} vs {bb:?}"),
        }
    }
}

#[test]
fn parallel_and_sequential_search_agree_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = fixtures::random_small(4, RandomMode::SemiIsland, 0.5);
    let inst = instance(&s);
    let mut m = Master::new(&inst).unwrap();
    // Equal objectives everywhere: the tie-break alone decides.
    let seq = m.solve_with(MasterMethod::Exhaustive, Execution::Sequential).unwrap();
    let par = m.solve_with(MasterMethod::Exhaustive, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let at = m.to_assignment(&vec![1; m.len()]);
    m.add_optimality_cut(10.0, &random_lambda(&inst, &mut rng), &at);
    let seq = m.solve_with(MasterMethod::Exhaustive, Execution::Sequential).unwrap();
    let par = m.solve_with(MasterMethod::Exhaustive, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn semi_island_master_is_solved_by_branch_and_bound() {
    let s = fixtures::case1(120.0);
    let inst = instance(&s);
    let mut m = Master::new(&inst).unwrap();
    assert_eq!(m.len(), 50);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        m.add_optimality_cut(8000.0, &random_lambda(&inst, &mut rng), &inst.default_assignment());
    }
    let sol = m.solve(Execution::default()).unwrap();
    assert!(m.feasible(&sol.x));
    eprintln!("case1 master: {} nodes", sol.nodes);
}
