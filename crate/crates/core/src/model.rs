//! Static ship model: equipment, loads, voyage, topology, penalties and faults.
//!
//! Everything here is immutable once loaded. Indices are 0-based throughout:
//! zone `z` is `0..zone_count`, and bus segment `k` joins zone `k` to zone
//! `k + 1` on its bus.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpsError};

pub const SCHEMA_VERSION: &str = "sps-scenario/1";

/// Default safety margin applied when penalties are auto-derived.
pub const DEFAULT_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    #[serde(rename = "MTG")]
    Main,
    #[serde(rename = "ATG")]
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bus {
    #[serde(rename = "PB")]
    Port,
    #[serde(rename = "SB")]
    Starboard,
}

impl Bus {
    pub fn other(self) -> Bus {
        match self {
            Bus::Port => Bus::Starboard,
            Bus::Starboard => Bus::Port,
        }
    }
}

impl std::fmt::Display for Bus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bus::Port => "PB",
            Bus::Starboard => "SB",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    pub zone: usize,
    pub kind: GeneratorKind,
    /// MW
    pub p_min: f64,
    /// MW
    pub p_max: f64,
    /// MW per interval
    pub ramp_max: f64,
    /// intervals
    pub t_min_on: usize,
    /// m.u./(MW²·h)
    pub cost_a: f64,
    /// m.u./(MW·h)
    pub cost_b: f64,
    /// m.u./h
    pub cost_c: f64,
    pub co2_a: f64,
    pub co2_b: f64,
    pub co2_c: f64,
    pub initial_on: bool,
    /// MW
    pub initial_power: f64,
}

impl GeneratorSpec {
    /// Fuel cost over one interval of length `dt` (hours).
    pub fn fuel_cost(&self, p: f64, on: f64, dt: f64) -> f64 {
        (self.cost_a * p * p + self.cost_b * p + self.cost_c * on) * dt
    }

    /// CO₂ mass produced over one interval.
    pub fn co2(&self, p: f64, on: f64, dt: f64) -> f64 {
        (self.co2_a * p * p + self.co2_b * p + self.co2_c * on) * dt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsmSpec {
    pub id: String,
    pub zone: usize,
    /// Bus the module is tapped onto; only matters when its zone is split.
    #[serde(default = "default_bus")]
    pub bus: Bus,
    /// MW, negative: maximum charging power.
    pub p_min: f64,
    /// MW, maximum discharging power.
    pub p_max: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e_initial: f64,
    pub lc_a: f64,
    pub lc_c: f64,
}

impl EsmSpec {
    /// Life-cycle cost over one interval, before the ξ_e weight.
    pub fn life_cycle_cost(&self, p: f64, dt: f64) -> f64 {
        (self.lc_a * p * p + self.lc_c) * dt
    }
}

fn default_bus() -> Bus {
    Bus::Port
}

/// One non-vital load block, tied to a single bus of a zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonVitalBlock {
    pub zone: usize,
    pub bus: Bus,
    /// MW per interval
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub horizon: usize,
    pub dt: f64,
    /// Vital + semi-vital demand, `[zone][t]` in MW.
    pub vs_by_zone: Vec<Vec<f64>>,
    pub nonvital: Vec<NonVitalBlock>,
}

impl LoadProfile {
    pub fn total_vs(&self, t: usize) -> f64 {
        self.vs_by_zone.iter().map(|z| z[t]).sum()
    }

    pub fn total_nonvital(&self, t: usize) -> f64 {
        self.nonvital.iter().map(|b| b.profile[t]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropulsionSpec {
    pub zone: usize,
    #[serde(default = "default_bus")]
    pub bus: Bus,
    /// MW/kn^β
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default = "default_modules")]
    pub module_count: usize,
}

fn default_beta() -> f64 {
    3.0
}

fn default_modules() -> usize {
    1
}

impl PropulsionSpec {
    /// Propulsion power needed to hold speed `v` (kn).
    pub fn power_at(&self, v: f64) -> f64 {
        self.alpha * v.max(0.0).powf(self.beta)
    }

    /// Speed reached with propulsion power `p` (MW).
    pub fn speed_at(&self, p: f64) -> f64 {
        (p.max(0.0) / self.alpha).powf(1.0 / self.beta)
    }

    pub fn p_min(&self) -> f64 {
        self.power_at(self.v_min)
    }

    pub fn p_max(&self) -> f64 {
        self.power_at(self.v_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoyageSpec {
    /// nautical miles
    pub distance: f64,
    pub horizon: usize,
    /// hours
    pub dt: f64,
    /// gCO₂/(tn·nm)
    pub eeoi_max: f64,
    /// tn
    pub f_sl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchPair {
    pub pb: u8,
    pub sb: u8,
}

impl SwitchPair {
    pub fn on(bus: Bus) -> Self {
        match bus {
            Bus::Port => SwitchPair { pb: 1, sb: 0 },
            Bus::Starboard => SwitchPair { pb: 0, sb: 1 },
        }
    }

    /// Bus the pair selects, if it is a valid exclusive configuration.
    pub fn selected(&self) -> Option<Bus> {
        match (self.pb, self.sb) {
            (1, 0) => Some(Bus::Port),
            (0, 1) => Some(Bus::Starboard),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub zone_count: usize,
    /// Present PB segments; segment `k` joins zones `k` and `k + 1`.
    pub pb_segments: Vec<usize>,
    pub sb_segments: Vec<usize>,
    #[serde(default = "default_zeta")]
    pub converter_efficiency: f64,
    pub switch_initial: Vec<SwitchPair>,
    #[serde(default = "default_one")]
    pub t_min_switch: usize,
}

fn default_zeta() -> f64 {
    1.0
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub xi_e: f64,
    #[serde(default)]
    pub xi_l: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default)]
    pub auto_derive: bool,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

/// Resolved penalty weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    pub xi_e: f64,
    pub xi_l: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultSet {
    #[serde(default)]
    pub failed_pb_segments: Vec<usize>,
    #[serde(default)]
    pub failed_sb_segments: Vec<usize>,
    #[serde(default)]
    pub failed_generators: Vec<String>,
}

impl FaultSet {
    pub fn is_empty(&self) -> bool {
        self.failed_pb_segments.is_empty()
            && self.failed_sb_segments.is_empty()
            && self.failed_generators.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipScenario {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub generators: Vec<GeneratorSpec>,
    pub esms: Vec<EsmSpec>,
    pub loads: LoadProfile,
    pub propulsion: PropulsionSpec,
    pub topology: NetworkTopology,
    pub voyage: VoyageSpec,
    pub penalties: PenaltyConfig,
    #[serde(default)]
    pub faults: FaultSet,
}

/// One broken rule found by [`validate_scenario`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl ShipScenario {
    pub fn horizon(&self) -> usize {
        self.voyage.horizon
    }

    pub fn dt(&self) -> f64 {
        self.voyage.dt
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: ShipScenario = serde_json::from_str(text)?;
        if s.schema != SCHEMA_VERSION {
            return Err(SpsError::Config(format!(
                "unsupported schema {:?}, expected {SCHEMA_VERSION:?}",
                s.schema
            )));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn generator_index(&self, id: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    /// Penalty weights in effect: either configured or derived with the margin.
    pub fn penalties(&self) -> Result<Penalties> {
        let cfg = &self.penalties;
        if cfg.auto_derive {
            let xi_l = cfg.margin * derive_xi_l_bound(self)?;
            let h = cfg.margin * derive_h_bound(self, xi_l)?;
            // A zero bound times the margin is still zero; keep both strictly positive.
            Ok(Penalties {
                xi_e: cfg.xi_e,
                xi_l: if xi_l > 0.0 { xi_l } else { 1.0 },
                h: if h > 0.0 { h } else { 1.0 },
            })
        } else {
            Ok(Penalties {
                xi_e: cfg.xi_e,
                xi_l: cfg.xi_l,
                h: cfg.h,
            })
        }
    }

    /// Same scenario with a different travel target.
    pub fn with_distance(&self, distance: f64) -> Self {
        let mut s = self.clone();
        s.voyage.distance = distance;
        s
    }
}

/// Smallest ξ_l for which shedding never beats extra generation or storage.
///
/// Takes the worst marginal generation cost `2·a·P^max + b` per generator and
/// the worst marginal storage cost `2·ξ_e·a_lc·P_e^max`.
pub fn derive_xi_l_bound(s: &ShipScenario) -> Result<f64> {
    if s.generators.is_empty() && s.esms.is_empty() {
        return Err(SpsError::Config(
            "cannot derive xi_l bound without generators or ESMs".into(),
        ));
    }
    let gen_term = s
        .generators
        .iter()
        .map(|g| 2.0 * g.cost_a * g.p_max + g.cost_b)
        .fold(0.0_f64, f64::max);
    let esm_p_max = s.esms.iter().map(|e| e.p_max).fold(0.0_f64, f64::max);
    let a_lc = s.esms.iter().map(|e| e.lc_a).fold(0.0_f64, f64::max);
    let esm_term = 2.0 * s.penalties.xi_e * a_lc * esm_p_max;
    Ok(gen_term.max(esm_term))
}

/// Smallest h for which cutting distance never beats paying for propulsion.
pub fn derive_h_bound(s: &ShipScenario, xi_l: f64) -> Result<f64> {
    let prop = &s.propulsion;
    if prop.v_max <= 0.0 {
        return Err(SpsError::Config("propulsion v_max must be positive".into()));
    }
    if !(prop.alpha > 0.0) || prop.beta < 1.0 {
        return Err(SpsError::Config("propulsion needs alpha > 0 and beta >= 1".into()));
    }
    let beta = prop.beta;
    let p_max = prop.p_max();
    Ok(beta * prop.alpha.powf(1.0 / beta) * xi_l / p_max.powf(1.0 / beta - 1.0))
}

fn push(v: &mut Vec<Violation>, field: impl Into<String>, rule: impl Into<String>) {
    v.push(Violation {
        field: field.into(),
        rule: rule.into(),
    });
}

/// Check every static invariant; an empty list means the scenario is usable.
pub fn validate_scenario(s: &ShipScenario) -> Vec<Violation> {
    let mut v = Vec::new();
    let z_count = s.topology.zone_count;
    let t_count = s.voyage.horizon;

    if s.schema != SCHEMA_VERSION {
        push(&mut v, "schema", format!("must be {SCHEMA_VERSION}"));
    }
    if z_count == 0 {
        push(&mut v, "topology.zone_count", "at least one zone");
    }

    let mut ids = std::collections::HashSet::new();
    for (i, g) in s.generators.iter().enumerate() {
        let f = |name: &str| format!("generators[{i}].{name}");
        if !ids.insert(g.id.clone()) {
            push(&mut v, f("id"), "duplicate generator id");
        }
        if g.zone >= z_count {
            push(&mut v, f("zone"), "zone index out of range");
        }
        if !(g.p_min >= 0.0 && g.p_min <= g.p_max) {
            push(&mut v, f("p_min"), "0 <= p_min <= p_max");
        }
        if !(g.ramp_max > 0.0) {
            push(&mut v, f("ramp_max"), "ramp_max > 0");
        }
        if g.t_min_on < 1 {
            push(&mut v, f("t_min_on"), "t_min_on >= 1");
        }
        if g.cost_a < 0.0 || g.co2_a < 0.0 {
            push(&mut v, f("cost_a"), "quadratic coefficients must be >= 0");
        }
        let p0 = g.initial_power;
        let ok = if g.initial_on {
            p0 >= g.p_min - 1e-9 && p0 <= g.p_max + 1e-9
        } else {
            p0 == 0.0
        };
        if !ok {
            push(
                &mut v,
                f("initial_power"),
                "initial_power must be 0 when off, in [p_min, p_max] when on",
            );
        }
    }

    for (i, e) in s.esms.iter().enumerate() {
        let f = |name: &str| format!("esms[{i}].{name}");
        if e.zone >= z_count {
            push(&mut v, f("zone"), "zone index out of range");
        }
        if !(e.p_min < 0.0 && 0.0 < e.p_max) {
            push(&mut v, f("p_min"), "p_min < 0 < p_max");
        }
        if !(e.e_min <= e.e_initial && e.e_initial <= e.e_max) {
            push(&mut v, f("e_initial"), "e_min <= e_initial <= e_max");
        }
        if e.lc_a < 0.0 || e.lc_c < 0.0 {
            push(&mut v, f("lc_a"), "life-cycle coefficients must be >= 0");
        }
    }

    let loads = &s.loads;
    if loads.horizon != t_count {
        push(&mut v, "loads.horizon", "must equal voyage.horizon");
    }
    if (loads.dt - s.voyage.dt).abs() > 1e-12 {
        push(&mut v, "loads.dt", "must equal voyage.dt");
    }
    if loads.vs_by_zone.len() != z_count {
        push(&mut v, "loads.vs_by_zone", "one row per zone");
    }
    for (z, row) in loads.vs_by_zone.iter().enumerate() {
        if row.len() != t_count {
            push(&mut v, format!("loads.vs_by_zone[{z}]"), "one entry per interval");
        }
        if row.iter().any(|x| !(*x >= 0.0)) {
            push(&mut v, format!("loads.vs_by_zone[{z}]"), "demand >= 0");
        }
    }
    for (i, b) in loads.nonvital.iter().enumerate() {
        if b.zone >= z_count {
            push(&mut v, format!("loads.nonvital[{i}].zone"), "zone index out of range");
        }
        if b.profile.len() != t_count {
            push(&mut v, format!("loads.nonvital[{i}].profile"), "one entry per interval");
        }
        if b.profile.iter().any(|x| !(*x >= 0.0)) {
            push(&mut v, format!("loads.nonvital[{i}].profile"), "demand >= 0");
        }
    }

    let p = &s.propulsion;
    if p.zone >= z_count {
        push(&mut v, "propulsion.zone", "zone index out of range");
    }
    if !(p.alpha > 0.0) {
        push(&mut v, "propulsion.alpha", "alpha > 0");
    }
    if !(p.beta >= 1.0) {
        push(&mut v, "propulsion.beta", "beta >= 1");
    }
    if !(0.0 <= p.v_min && p.v_min < p.v_max) {
        push(&mut v, "propulsion.v_min", "0 <= v_min < v_max");
    }
    if p.module_count == 0 {
        push(&mut v, "propulsion.module_count", "at least one module");
    }

    let voy = &s.voyage;
    if !(voy.distance >= 0.0) {
        push(&mut v, "voyage.distance", "D >= 0");
    }
    if voy.horizon < 1 {
        push(&mut v, "voyage.horizon", "T >= 1");
    }
    if !(voy.dt > 0.0) {
        push(&mut v, "voyage.dt", "dt > 0");
    }
    if !(voy.eeoi_max > 0.0) {
        push(&mut v, "voyage.eeoi_max", "eeoi_max > 0");
    }
    if !(voy.f_sl > 0.0) {
        push(&mut v, "voyage.f_sl", "f_sl > 0");
    }

    let topo = &s.topology;
    let seg_limit = z_count.saturating_sub(1);
    for (name, segs) in [("pb_segments", &topo.pb_segments), ("sb_segments", &topo.sb_segments)] {
        if segs.iter().any(|&k| k >= seg_limit) {
            push(&mut v, format!("topology.{name}"), "segment index out of range");
        }
    }
    if !(topo.converter_efficiency > 0.0 && topo.converter_efficiency <= 1.0) {
        push(&mut v, "topology.converter_efficiency", "zeta in (0, 1]");
    }
    if topo.switch_initial.len() != z_count {
        push(&mut v, "topology.switch_initial", "one switch pair per zone");
    }
    for (z, sw) in topo.switch_initial.iter().enumerate() {
        if sw.selected().is_none() {
            push(
                &mut v,
                format!("topology.switch_initial[{z}]"),
                "exactly one of S_P, S_S is 1",
            );
        }
    }
    if topo.t_min_switch < 1 {
        push(&mut v, "topology.t_min_switch", "t_min_switch >= 1");
    }

    let f = &s.faults;
    for &k in &f.failed_pb_segments {
        if !topo.pb_segments.contains(&k) {
            push(&mut v, "faults.failed_pb_segments", format!("unknown PB segment {k}"));
        }
    }
    for &k in &f.failed_sb_segments {
        if !topo.sb_segments.contains(&k) {
            push(&mut v, "faults.failed_sb_segments", format!("unknown SB segment {k}"));
        }
    }
    for id in &f.failed_generators {
        if s.generator_index(id).is_none() {
            push(&mut v, "faults.failed_generators", format!("unknown generator {id}"));
        }
    }

    let pen = &s.penalties;
    if !(pen.xi_e >= 0.0) {
        push(&mut v, "penalties.xi_e", "xi_e >= 0");
    }
    if pen.auto_derive {
        if !(pen.margin > 1.0) {
            push(&mut v, "penalties.margin", "margin factor must exceed 1");
        }
    } else if let Ok(bound) = derive_xi_l_bound(s) {
        if !(pen.xi_l > bound) {
            push(
                &mut v,
                "penalties.xi_l",
                format!("xi_l must exceed {bound:.6}"),
            );
        }
        if let Ok(hb) = derive_h_bound(s, pen.xi_l) {
            if !(pen.h > hb) {
                push(&mut v, "penalties.h", format!("h must exceed {hb:.6}"));
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn reference_fixture_is_valid() {
        let s = fixtures::case1(120.0);
        assert_eq!(validate_scenario(&s), vec![]);
    }

    #[test]
    fn redundant_switch_exclusivity() {
        let mut s = fixtures::case1(120.0);
        s.topology.switch_initial[2] = SwitchPair { pb: 1, sb: 1 };
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("exactly one of S_P, S_S"));
    }

    #[test]
    fn esm_energy_ordering() {
        let mut s = fixtures::case1(120.0);
        s.esms[0].e_initial = s.esms[0].e_max + 0.1;
        let v = validate_scenario(&s);
        assert!(v.iter().any(|x| x.rule.contains("e_min <= e_initial")), "{v:?}");
    }

    #[test]
    fn xi_l_bound_matches_hand_value() {
        let s = fixtures::case1(120.0);
        let b = derive_xi_l_bound(&s).unwrap();
        assert!((b - 226.0).abs() < 1e-9, "{b}");
        assert!(s.penalties.xi_l > b);
    }

    #[test]
    fn zero_costs_give_zero_bound() {
        let mut s = fixtures::case1(120.0);
        for g in &mut s.generators {
            g.cost_a = 0.0;
            g.cost_b = 0.0;
            g.cost_c = 0.0;
        }
        for e in &mut s.esms {
            e.lc_a = 0.0;
            e.lc_c = 0.0;
        }
        assert_eq!(derive_xi_l_bound(&s).unwrap(), 0.0);
    }

    #[test]
    fn empty_equipment_is_config_error() {
        let mut s = fixtures::case1(120.0);
        s.generators.clear();
        s.esms.clear();
        assert!(matches!(derive_xi_l_bound(&s), Err(SpsError::Config(_))));
    }

    #[test]
    fn h_bound_matches_hand_value() {
        let s = fixtures::case1(120.0);
        let p_max = s.propulsion.p_max();
        assert!((p_max - 10.8086).abs() < 1e-4, "{p_max}");
        let h = derive_h_bound(&s, 265.0).unwrap();
        assert!((h - 505.4).abs() / 505.4 < 0.005, "{h}");
        assert!(s.penalties.h > h);
    }

    #[test]
    fn h_bound_linear_propulsion() {
        let mut s = fixtures::case1(120.0);
        s.propulsion.beta = 1.0;
        let h = derive_h_bound(&s, 265.0).unwrap();
        assert!((h - s.propulsion.alpha * 265.0).abs() < 1e-12);
    }

    #[test]
    fn h_bound_rejects_zero_speed() {
        let mut s = fixtures::case1(120.0);
        s.propulsion.v_max = 0.0;
        assert!(derive_h_bound(&s, 265.0).is_err());
    }

    #[test]
    fn low_penalties_are_flagged() {
        let mut s = fixtures::case1(120.0);
        s.penalties.xi_l = 200.0;
        s.penalties.h = 100.0;
        let v = validate_scenario(&s);
        assert!(v.iter().any(|x| x.field == "penalties.xi_l"));
        assert!(v.iter().any(|x| x.field == "penalties.h"));
    }

    #[test]
    fn unknown_fault_references() {
        let mut s = fixtures::case1(120.0);
        s.faults.failed_pb_segments.push(40);
        s.faults.failed_generators.push("nope".into());
        let v = validate_scenario(&s);
        assert_eq!(v.iter().filter(|x| x.field.starts_with("faults")).count(), 2);
    }

    #[test]
    fn schema_version_is_enforced() {
        let mut s = fixtures::case1(120.0);
        s.schema = "sps-scenario/0".into();
        let text = serde_json::to_string(&s).unwrap();
        assert!(ShipScenario::from_json(&text).is_err());
    }
}
