//! Scenario fixtures: the reference MVAC ship in semi-island and island layouts,
//! plus a seeded generator of small randomized instances for cross-checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::*;

/// Service-load share of vital, semi-vital and non-vital tiers.
pub const LOAD_FRACTIONS: [f64; 3] = [0.3, 0.5, 0.2];

/// Synthetic 10-interval total service load (MW), peaking at the sixth interval.
pub const CASE1_SERVICE_LOAD: [f64; 10] = [4.0, 4.4, 5.0, 5.6, 6.2, 6.6, 5.8, 5.0, 4.6, 4.2];

/// Synthetic 12-interval total service load (MW) for the island layout.
pub const CASE2_SERVICE_LOAD: [f64; 12] =
    [4.2, 4.6, 6.4, 7.0, 6.8, 5.6, 5.0, 4.8, 5.2, 5.6, 5.0, 4.4];

pub fn mtg(id: &str, zone: usize) -> GeneratorSpec {
    let p_max = 8.0;
    GeneratorSpec {
        id: id.into(),
        zone,
        kind: GeneratorKind::Main,
        p_min: 0.15 * p_max,
        p_max,
        ramp_max: 0.9 * p_max,
        t_min_on: 1,
        cost_a: 13.5,
        cost_b: 10.0,
        cost_c: 300.0,
        co2_a: 13.5,
        co2_b: 10.0,
        co2_c: 300.0,
        initial_on: true,
        initial_power: 4.0,
    }
}

pub fn atg(id: &str, zone: usize) -> GeneratorSpec {
    let p_max = 4.0;
    GeneratorSpec {
        id: id.into(),
        zone,
        kind: GeneratorKind::Auxiliary,
        p_min: 0.1 * p_max,
        p_max,
        ramp_max: 0.9 * p_max,
        t_min_on: 1,
        cost_a: 6.0,
        cost_b: 30.0,
        cost_c: 250.0,
        co2_a: 6.0,
        co2_b: 30.0,
        co2_c: 250.0,
        initial_on: true,
        initial_power: 2.0,
    }
}

pub fn esm(id: &str, zone: usize, bus: Bus) -> EsmSpec {
    let e_max = 2.0;
    let e_min = 0.1 * e_max;
    EsmSpec {
        id: id.into(),
        zone,
        bus,
        p_min: -0.5,
        p_max: 0.5,
        e_min,
        e_max,
        e_initial: 0.5 * (e_min + e_max),
        lc_a: 1.0,
        lc_c: 0.5,
    }
}

/// Split a total service-load series over zones.
///
/// Each zone gets `weight · total` split into vital+semi-vital (first two
/// tiers) and a non-vital block on `nonvital_bus[z]`.
pub fn split_profile(
    total: &[f64],
    zone_weights: &[f64],
    nonvital_bus: &[Bus],
    dt: f64,
) -> LoadProfile {
    let wsum: f64 = zone_weights.iter().sum();
    let vs_share = LOAD_FRACTIONS[0] + LOAD_FRACTIONS[1];
    let nv_share = LOAD_FRACTIONS[2];
    let vs_by_zone = zone_weights
        .iter()
        .map(|w| total.iter().map(|x| x * w / wsum * vs_share).collect())
        .collect();
    let nonvital = zone_weights
        .iter()
        .enumerate()
        .map(|(z, w)| NonVitalBlock {
            zone: z,
            bus: nonvital_bus[z],
            profile: total.iter().map(|x| x * w / wsum * nv_share).collect(),
        })
        .collect();
    LoadProfile {
        horizon: total.len(),
        dt,
        vs_by_zone,
        nonvital,
    }
}

fn reference_propulsion(zone: usize, bus: Bus) -> PropulsionSpec {
    PropulsionSpec {
        zone,
        bus,
        alpha: 2.2e-3,
        beta: 3.0,
        v_min: 0.0,
        v_max: 17.0,
        module_count: 1,
    }
}

fn reference_penalties() -> PenaltyConfig {
    PenaltyConfig {
        xi_e: 1.0,
        xi_l: 265.0,
        h: 1.15e3,
        auto_derive: false,
        margin: DEFAULT_MARGIN,
    }
}

fn alternating_buses(z: usize) -> Vec<Bus> {
    (0..z)
        .map(|i| if i % 2 == 0 { Bus::Port } else { Bus::Starboard })
        .collect()
}

fn full_topology(zone_count: usize, initial: Vec<SwitchPair>) -> NetworkTopology {
    NetworkTopology {
        zone_count,
        pb_segments: (0..zone_count - 1).collect(),
        sb_segments: (0..zone_count - 1).collect(),
        converter_efficiency: 1.0,
        switch_initial: initial,
        t_min_switch: 1,
    }
}

/// Six-zone semi-island case: MTG in zone 0, ATG in zone 5, ESMs in zones
/// 0, 2, 3, 5, propulsion in zone 1. PB is cut between zones 0–1 and SB
/// between zones 3–4, leaving zones 1–3 coupled. Storage modules are rated 0.3 MW.
pub fn case1(distance: f64) -> ShipScenario {
    let z = 6;
    let t = CASE1_SERVICE_LOAD.len();
    let dt = 1.0;
    ShipScenario {
        schema: SCHEMA_VERSION.into(),
        name: "case1-semi-island".into(),
        generators: vec![mtg("MTG1", 0), atg("ATG1", 5)],
        esms: [("ESM1", 0), ("ESM3", 2), ("ESM4", 3), ("ESM6", 5)]
            .into_iter()
            .map(|(id, zone)| EsmSpec {
                p_min: -0.3,
                p_max: 0.3,
                ..esm(id, zone, Bus::Port)
            })
            .collect(),
        loads: split_profile(&CASE1_SERVICE_LOAD, &[1.0; 6], &alternating_buses(z), dt),
        propulsion: reference_propulsion(1, Bus::Starboard),
        topology: full_topology(
            z,
            vec![
                SwitchPair::on(Bus::Port),
                SwitchPair::on(Bus::Port),
                SwitchPair::on(Bus::Starboard),
                SwitchPair::on(Bus::Port),
                SwitchPair::on(Bus::Starboard),
                SwitchPair::on(Bus::Port),
            ],
        ),
        voyage: VoyageSpec {
            distance,
            horizon: t,
            dt,
            eeoi_max: 23.0,
            f_sl: 30.0,
        },
        penalties: reference_penalties(),
        faults: FaultSet {
            failed_pb_segments: vec![0],
            failed_sb_segments: vec![3],
            failed_generators: vec![],
        },
    }
}

/// Six-zone island case: MTG in zone 0, ATGs in zones 2 and 5, ESMs in
/// zones 0, 2, 4, propulsion in zone 1; both buses cut between zones 2–3.
pub fn case2(distance: f64) -> ShipScenario {
    let z = 6;
    let t = CASE2_SERVICE_LOAD.len();
    let dt = 1.0;
    ShipScenario {
        schema: SCHEMA_VERSION.into(),
        name: "case2-island".into(),
        generators: vec![mtg("MTG1", 0), atg("ATG1", 2), atg("ATG2", 5)],
        esms: vec![
            esm("ESM1", 0, Bus::Port),
            esm("ESM3", 2, Bus::Port),
            esm("ESM5", 4, Bus::Port),
        ],
        loads: split_profile(&CASE2_SERVICE_LOAD, &[1.0; 6], &alternating_buses(z), dt),
        propulsion: reference_propulsion(1, Bus::Port),
        topology: full_topology(z, vec![SwitchPair::on(Bus::Port); z]),
        voyage: VoyageSpec {
            distance,
            horizon: t,
            dt,
            eeoi_max: 23.0,
            f_sl: 30.0,
        },
        penalties: reference_penalties(),
        faults: FaultSet {
            failed_pb_segments: vec![2],
            failed_sb_segments: vec![2],
            failed_generators: vec![],
        },
    }
}

/// One-zone ship with a single generator, no storage, no non-vital load and
/// no travel target: the smallest scenario the builder accepts.
pub fn minimal(vs: &[f64]) -> ShipScenario {
    let dt = 1.0;
    let mut g = mtg("G1", 0);
    g.initial_power = vs.first().copied().unwrap_or(0.0).clamp(g.p_min, g.p_max);
    ShipScenario {
        schema: SCHEMA_VERSION.into(),
        name: "minimal".into(),
        generators: vec![g],
        esms: vec![],
        loads: LoadProfile {
            horizon: vs.len(),
            dt,
            vs_by_zone: vec![vs.to_vec()],
            nonvital: vec![],
        },
        propulsion: reference_propulsion(0, Bus::Port),
        topology: full_topology(1, vec![SwitchPair::on(Bus::Port)]),
        voyage: VoyageSpec {
            distance: 0.0,
            horizon: vs.len(),
            dt,
            eeoi_max: 23.0,
            f_sl: 30.0,
        },
        penalties: reference_penalties(),
        faults: FaultSet::default(),
    }
}

/// Fault layout of a randomized instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomMode {
    Normal,
    NonIsland,
    GeneratorFault,
    Island,
    SemiIsland,
}

impl RandomMode {
    pub const ALL: [RandomMode; 5] = [
        RandomMode::Normal,
        RandomMode::NonIsland,
        RandomMode::GeneratorFault,
        RandomMode::Island,
        RandomMode::SemiIsland,
    ];
}

/// Small seeded instance with at most 12 instance binaries.
///
/// Penalties are auto-derived, so both penalty bounds hold. `reach` scales
/// the travel target relative to the uniform speed the generators can
/// afford; values above 1 tend to make the voyage infeasible.
pub fn random_small(seed: u64, mode: RandomMode, reach: f64) -> ShipScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (zones, m, t): (usize, usize, usize) = match mode {
        RandomMode::Normal | RandomMode::NonIsland => (rng.gen_range(2..=4), 2, rng.gen_range(2..=3)),
        RandomMode::GeneratorFault => (rng.gen_range(2..=3), 2, 3),
        RandomMode::Island => (rng.gen_range(2..=4), 2, 3),
        RandomMode::SemiIsland => (3, 2, 2),
    };
    let dt = 1.0;

    let mut gens = Vec::new();
    for i in 0..m {
        let p_max: f64 = rng.gen_range(2.0..8.0);
        let a: f64 = rng.gen_range(2.0..14.0);
        let b: f64 = rng.gen_range(5.0..30.0);
        let c: f64 = rng.gen_range(20.0..120.0);
        let zone = if i == 0 { 0 } else { zones - 1 };
        let on = rng.gen_bool(0.7);
        gens.push(GeneratorSpec {
            id: format!("G{}", i + 1),
            zone,
            kind: if i == 0 { GeneratorKind::Main } else { GeneratorKind::Auxiliary },
            p_min: 0.1 * p_max,
            p_max,
            ramp_max: 0.9 * p_max,
            t_min_on: rng.gen_range(1..=2),
            cost_a: a,
            cost_b: b,
            cost_c: c,
            co2_a: a,
            co2_b: b,
            co2_c: c,
            initial_on: on,
            initial_power: if on { 0.5 * p_max } else { 0.0 },
        });
    }

    let n_esm = rng.gen_range(0..=2);
    let esms: Vec<EsmSpec> = (0..n_esm)
        .map(|i| {
            let p: f64 = rng.gen_range(0.3..1.0);
            let e_max: f64 = rng.gen_range(0.8..2.0);
            EsmSpec {
                id: format!("E{}", i + 1),
                zone: rng.gen_range(0..zones),
                bus: if rng.gen_bool(0.5) { Bus::Port } else { Bus::Starboard },
                p_min: -p,
                p_max: p,
                e_min: 0.1 * e_max,
                e_max,
                e_initial: rng.gen_range(0.3..0.9) * e_max,
                lc_a: rng.gen_range(0.5..2.0),
                lc_c: rng.gen_range(0.1..1.0),
            }
        })
        .collect();

    let cap: f64 = gens.iter().map(|g| g.p_max).sum();
    let service_share: f64 = rng.gen_range(0.2..0.45);
    let total: Vec<f64> = (0..t)
        .map(|_| cap * service_share * rng.gen_range(0.7..1.3))
        .collect();
    let weights: Vec<f64> = (0..zones).map(|_| rng.gen_range(0.5..1.5)).collect();
    let buses: Vec<Bus> = (0..zones)
        .map(|_| if rng.gen_bool(0.5) { Bus::Port } else { Bus::Starboard })
        .collect();
    let loads = split_profile(&total, &weights, &buses, dt);

    let prop_zone = rng.gen_range(0..zones);
    let propulsion = PropulsionSpec {
        zone: prop_zone,
        bus: if rng.gen_bool(0.5) { Bus::Port } else { Bus::Starboard },
        alpha: 2.2e-3,
        beta: 3.0,
        v_min: 0.0,
        v_max: 17.0,
        module_count: 1,
    };
    // Target distance: uniform sailing on the headroom left after service loads.
    let mean_service: f64 = total.iter().sum::<f64>() / t as f64;
    let headroom = (0.8 * cap - mean_service).max(0.2);
    let v_afford = propulsion.speed_at(headroom).min(propulsion.v_max);
    let distance = (reach * v_afford * t as f64 * dt).max(0.0);

    let initial: Vec<SwitchPair> = (0..zones)
        .map(|_| SwitchPair::on(if rng.gen_bool(0.5) { Bus::Port } else { Bus::Starboard }))
        .collect();
    let mut topology = full_topology(zones, initial);
    topology.converter_efficiency = rng.gen_range(0.95..=1.0);

    let faults = match mode {
        RandomMode::Normal => FaultSet::default(),
        RandomMode::NonIsland => {
            let k = rng.gen_range(0..zones - 1);
            if rng.gen_bool(0.5) {
                FaultSet { failed_pb_segments: vec![k], ..Default::default() }
            } else {
                FaultSet { failed_sb_segments: vec![k], ..Default::default() }
            }
        }
        RandomMode::GeneratorFault => FaultSet {
            failed_generators: vec![gens[rng.gen_range(0..m)].id.clone()],
            ..Default::default()
        },
        RandomMode::Island => {
            let k = rng.gen_range(0..zones - 1);
            FaultSet {
                failed_pb_segments: vec![k],
                failed_sb_segments: vec![k],
                ..Default::default()
            }
        }
        RandomMode::SemiIsland => {
            // Zone 1 is coupled between the zone-0 and zone-2 generator islands.
            if rng.gen_bool(0.5) {
                FaultSet {
                    failed_pb_segments: vec![0],
                    failed_sb_segments: vec![1],
                    ..Default::default()
                }
            } else {
                FaultSet {
                    failed_pb_segments: vec![1],
                    failed_sb_segments: vec![0],
                    ..Default::default()
                }
            }
        }
    };

    ShipScenario {
        schema: SCHEMA_VERSION.into(),
        name: format!("random-{mode:?}-{seed}"),
        generators: gens,
        esms,
        loads,
        propulsion,
        topology,
        voyage: VoyageSpec {
            distance,
            horizon: t,
            dt,
            eeoi_max: 23.0,
            f_sl: 30.0,
        },
        penalties: PenaltyConfig {
            xi_e: 1.0,
            xi_l: 0.0,
            h: 0.0,
            auto_derive: true,
            margin: DEFAULT_MARGIN,
        },
        faults,
    }
}
