//! Island partition induced by bus and generator faults.
//!
//! Each zone contributes a PB node and an SB node. Surviving longitudinal
//! segments join neighbouring nodes on the same bus; a healthy generator's
//! converter feeds both buses of its zone and so joins that zone's two
//! nodes. ESMs, the propulsion block and non-vital loads hang off a single
//! bus node. A connected component carrying any equipment or non-vital load
//! is an island part. The redundant switch pair is not an edge: when a
//! zone's two nodes fall in different parts the zone is coupled and its
//! switch becomes a decision variable.

use serde::Serialize;

use crate::error::{Result, SpsError};
use crate::model::{Bus, ShipScenario, SwitchPair};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FaultMode {
    Normal,
    NonIsland,
    Island,
    SemiIsland,
}

/// How a zone's redundant switch pair behaves over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SwitchRole {
    /// Held on one bus for every interval.
    Fixed(Bus),
    /// Chosen per interval; PB side feeds `pb_part`, SB side feeds `sb_part`.
    Coupled { pb_part: usize, sb_part: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IslandPart {
    pub index: usize,
    /// M_w: healthy generators.
    pub generators: Vec<usize>,
    /// N_w
    pub esms: Vec<usize>,
    /// R_w: true when the propulsion block sits in this part.
    pub propulsion: bool,
    /// L_w: zones whose vital loads this part always serves.
    pub zones: Vec<usize>,
    /// Ω_pb,w: coupled zones reachable from this part through their PB switch.
    pub omega_pb: Vec<usize>,
    /// Ω_sb,w
    pub omega_sb: Vec<usize>,
    /// Non-vital load blocks fed by this part.
    pub nonvital: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IslandPartition {
    pub mode: FaultMode,
    pub parts: Vec<IslandPart>,
    pub coupled_zones: Vec<usize>,
    pub switch_roles: Vec<SwitchRole>,
    pub failed_generators: Vec<usize>,
    /// Part holding the propulsion modules.
    pub propulsion_part: usize,
}

impl IslandPartition {
    pub fn part_of_generator(&self, g: usize) -> Option<usize> {
        self.parts.iter().position(|p| p.generators.contains(&g))
    }

    pub fn part_of_esm(&self, e: usize) -> Option<usize> {
        self.parts.iter().position(|p| p.esms.contains(&e))
    }

    pub fn is_failed(&self, g: usize) -> bool {
        self.failed_generators.contains(&g)
    }

    /// Structured text rendering used by `sps faults`.
    pub fn describe(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "mode: {:?}", self.mode);
        let _ = writeln!(out, "parts: {}", self.parts.len());
        for p in &self.parts {
            let _ = writeln!(
                out,
                "  part {}: zones={:?} generators={:?} esms={:?} propulsion={} omega_pb={:?} omega_sb={:?} nonvital={:?}",
                p.index, p.zones, p.generators, p.esms, p.propulsion, p.omega_pb, p.omega_sb, p.nonvital
            );
        }
        let _ = writeln!(out, "coupled_zones: {:?}", self.coupled_zones);
        let _ = writeln!(out, "failed_generators: {:?}", self.failed_generators);
        out
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so component ids are stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn node(zone: usize, bus: Bus) -> usize {
    2 * zone
        + match bus {
            Bus::Port => 0,
            Bus::Starboard => 1,
        }
}

/// Partition the ship according to `scenario.faults`.
pub fn partition(s: &ShipScenario) -> Result<IslandPartition> {
    let topo = &s.topology;
    let faults = &s.faults;
    let z_count = topo.zone_count;

    for &k in &faults.failed_pb_segments {
        if !topo.pb_segments.contains(&k) {
            return Err(SpsError::UnknownFault(format!("PB segment {k}")));
        }
    }
    for &k in &faults.failed_sb_segments {
        if !topo.sb_segments.contains(&k) {
            return Err(SpsError::UnknownFault(format!("SB segment {k}")));
        }
    }
    let mut failed_generators = Vec::new();
    for id in &faults.failed_generators {
        match s.generator_index(id) {
            Some(i) => failed_generators.push(i),
            None => return Err(SpsError::UnknownFault(format!("generator {id}"))),
        }
    }
    failed_generators.sort_unstable();
    failed_generators.dedup();

    let mut dsu = Dsu::new(2 * z_count);
    for &k in &topo.pb_segments {
        if !faults.failed_pb_segments.contains(&k) {
            dsu.union(node(k, Bus::Port), node(k + 1, Bus::Port));
        }
    }
    for &k in &topo.sb_segments {
        if !faults.failed_sb_segments.contains(&k) {
            dsu.union(node(k, Bus::Starboard), node(k + 1, Bus::Starboard));
        }
    }
    for (i, g) in s.generators.iter().enumerate() {
        if !failed_generators.contains(&i) {
            dsu.union(node(g.zone, Bus::Port), node(g.zone, Bus::Starboard));
        }
    }

    // Live components, ordered by their smallest node.
    let mut live = vec![false; 2 * z_count];
    for (i, g) in s.generators.iter().enumerate() {
        if !failed_generators.contains(&i) {
            let r = dsu.find(node(g.zone, Bus::Port));
            live[r] = true;
        }
    }
    for e in &s.esms {
        let r = dsu.find(node(e.zone, e.bus));
        live[r] = true;
    }
    let prop_root = dsu.find(node(s.propulsion.zone, s.propulsion.bus));
    live[prop_root] = true;
    for b in &s.loads.nonvital {
        let r = dsu.find(node(b.zone, b.bus));
        live[r] = true;
    }
    let mut root_to_part = vec![usize::MAX; 2 * z_count];
    let mut parts: Vec<IslandPart> = Vec::new();
    for n in 0..2 * z_count {
        let r = dsu.find(n);
        if live[r] && root_to_part[r] == usize::MAX {
            root_to_part[r] = parts.len();
            parts.push(IslandPart {
                index: parts.len(),
                generators: vec![],
                esms: vec![],
                propulsion: false,
                zones: vec![],
                omega_pb: vec![],
                omega_sb: vec![],
                nonvital: vec![],
            });
        }
    }
    let part_at = |dsu: &mut Dsu, zone: usize, bus: Bus| -> Option<usize> {
        let r = dsu.find(node(zone, bus));
        (root_to_part[r] != usize::MAX).then_some(root_to_part[r])
    };

    for (i, g) in s.generators.iter().enumerate() {
        if !failed_generators.contains(&i) {
            let w = part_at(&mut dsu, g.zone, Bus::Port).expect("generator part is live");
            parts[w].generators.push(i);
        }
    }
    for (i, e) in s.esms.iter().enumerate() {
        let w = part_at(&mut dsu, e.zone, e.bus).expect("esm part is live");
        parts[w].esms.push(i);
    }
    let propulsion_part =
        part_at(&mut dsu, s.propulsion.zone, s.propulsion.bus).expect("propulsion part is live");
    parts[propulsion_part].propulsion = true;
    for (i, b) in s.loads.nonvital.iter().enumerate() {
        let w = part_at(&mut dsu, b.zone, b.bus).expect("load part is live");
        parts[w].nonvital.push(i);
    }

    // Exactly one damaged bus: healthy-bus reconfiguration for every zone.
    let pb_hit = !faults.failed_pb_segments.is_empty();
    let sb_hit = !faults.failed_sb_segments.is_empty();
    let preferred = match (pb_hit, sb_hit) {
        (true, false) => Some(Bus::Starboard),
        (false, true) => Some(Bus::Port),
        _ => None,
    };

    let mut switch_roles = Vec::with_capacity(z_count);
    let mut coupled_zones = Vec::new();
    for z in 0..z_count {
        let initial = topo.switch_initial[z].selected().unwrap_or(Bus::Port);
        let pb = part_at(&mut dsu, z, Bus::Port);
        let sb = part_at(&mut dsu, z, Bus::Starboard);
        let role = match (pb, sb) {
            (Some(a), Some(b)) if a == b => {
                parts[a].zones.push(z);
                SwitchRole::Fixed(preferred.unwrap_or(initial))
            }
            (Some(a), Some(b)) => {
                parts[a].omega_pb.push(z);
                parts[b].omega_sb.push(z);
                coupled_zones.push(z);
                SwitchRole::Coupled { pb_part: a, sb_part: b }
            }
            (Some(a), None) => {
                parts[a].zones.push(z);
                SwitchRole::Fixed(Bus::Port)
            }
            (None, Some(b)) => {
                parts[b].zones.push(z);
                SwitchRole::Fixed(Bus::Starboard)
            }
            (None, None) => {
                // Stranded zone: its vital load has no source.
                let idx = parts.len();
                parts.push(IslandPart {
                    index: idx,
                    generators: vec![],
                    esms: vec![],
                    propulsion: false,
                    zones: vec![z],
                    omega_pb: vec![],
                    omega_sb: vec![],
                    nonvital: vec![],
                });
                SwitchRole::Fixed(initial)
            }
        };
        switch_roles.push(role);
    }

    let mode = if faults.is_empty() {
        FaultMode::Normal
    } else if !coupled_zones.is_empty() {
        FaultMode::SemiIsland
    } else if parts.len() > 1 {
        FaultMode::Island
    } else {
        FaultMode::NonIsland
    };

    Ok(IslandPartition {
        mode,
        parts,
        coupled_zones,
        switch_roles,
        failed_generators,
        propulsion_part,
    })
}

/// Number of (zone, interval) positions where the switch pair differs from
/// the previous interval; interval 0 compares against the initial states.
pub fn count_switch_changes(schedule: &Schedule, initial: &[SwitchPair]) -> usize {
    let mut n = 0;
    for (z, init) in initial.iter().enumerate() {
        let mut prev = (init.pb, init.sb);
        for t in 0..schedule.s_p[z].len() {
            let cur = (schedule.s_p[z][t], schedule.s_s[z][t]);
            if cur != prev {
                n += 1;
            }
            prev = cur;
        }
    }
    n
}
