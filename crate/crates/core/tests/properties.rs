use proptest::prelude::*;
use sps_core::benders::{run, BendersConfig};
use sps_core::fault::{partition, FaultMode};
use sps_core::fixtures::{self, RandomMode};
use sps_core::lnbd::{decompose_time, update_distance_targets, LnbdConfig};
use sps_core::model::ShipScenario;
use sps_core::problem::build;
use sps_core::verify::verify;

fn mode() -> impl Strategy<Value = RandomMode> {
    prop::sample::select(RandomMode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn scenarios_survive_a_json_round_trip(seed in 0u64..1000, m in mode(), reach in 0.2f64..1.5) {
        let s = fixtures::random_small(seed, m, reach);
        let back = ShipScenario::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(s, back);
    }

    #[test]
    fn every_zone_lands_in_one_part_or_is_coupled(seed in 0u64..1000, m in mode()) {
        let s = fixtures::random_small(seed, m, 0.6);
        let p = partition(&s).unwrap();
        for z in 0..s.topology.zone_count {
            let owners = p.parts.iter().filter(|w| w.zones.contains(&z)).count();
            let coupled = p.coupled_zones.contains(&z);
            prop_assert!(owners + usize::from(coupled) == 1, "zone {} owners {} coupled {}", z, owners, coupled);
        }
        prop_assert_eq!(p.parts.iter().filter(|w| w.propulsion).count(), 1);
        if p.mode != FaultMode::SemiIsland {
            prop_assert!(p.coupled_zones.is_empty());
        }
    }

    #[test]
    fn distance_targets_sum_to_the_voyage(seed in 0u64..1000, m in mode(), phi in 0.0f64..=1.0, d in 1.0f64..200.0) {
        let s = fixtures::random_small(seed, m, 0.6).with_distance(d);
        let inst = build(&s, &partition(&s).unwrap()).unwrap();
        let split = decompose_time(&inst, &LnbdConfig::constant(phi, s.horizon())).unwrap();
        if split.warnings.is_empty() {
            let sum: f64 = split.distance.iter().sum();
            prop_assert!((sum - d).abs() <= 1e-9 * d);
        }
        prop_assert!(split.distance.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn target_updates_add_the_mean_shortfall(short in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..5.0], 2..8)) {
        let targets: Vec<f64> = (0..short.len()).map(|t| 10.0 + t as f64).collect();
        match update_distance_targets(&short, &targets) {
            Some(next) => {
                let add: f64 = short.iter().sum::<f64>() / short.len() as f64;
                for (n, t) in next.iter().zip(&targets) {
                    prop_assert!((n - t - add).abs() < 1e-12);
                }
                prop_assert!(short.iter().any(|&d| d > 1e-6) && short.iter().any(|&d| d <= 1e-6));
            }
            None => {
                let positive = short.iter().filter(|&&d| d > 1e-6).count();
                prop_assert!(positive == 0 || positive == short.len());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn benders_schedules_verify_and_bounds_stay_monotone(seed in 0u64..1000, m in mode(), reach in 0.3f64..1.4) {
        let s = fixtures::random_small(seed, m, reach);
        let inst = build(&s, &partition(&s).unwrap()).unwrap();
        if let Ok((x, rep)) = run(&inst, &BendersConfig::default()) {
            let check = verify(&s, &inst.partition, &x, 1e-6).unwrap();
            prop_assert!(check.passed(), "{}", check.table());
            prop_assert!(rep.upper_bounds.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(rep.lower_bounds.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(rep.kkt_max <= 1e-6);
            prop_assert!(x.d_d >= 0.0);
        }
    }
}
