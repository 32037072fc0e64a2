//! Post-hoc checking of a schedule against the full model, recomputed from
//! the scenario alone.

use serde::Serialize;

use crate::convex::program::Tag;
use crate::error::{Result, SpsError};
use crate::fault::{FaultMode, IslandPartition, SwitchRole};
use crate::model::{Bus, Penalties, ShipScenario};
use crate::problem::part_loads;
use crate::schedule::{CostBreakdown, Schedule};

/// Constraint families checked besides the program tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Program(Tag),
    FailedOffline,
    Startup,
    MinOnTime,
    SwitchPair,
    SwitchMinTime,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Program(t) => t.label(),
            Family::FailedOffline => "failed generator offline",
            Family::Startup => "startup indicator",
            Family::MinOnTime => "generator minimum on-time",
            Family::SwitchPair => "switch positions",
            Family::SwitchMinTime => "switch minimum time",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub family: Family,
    pub max_violation: f64,
    /// Allowed violation for this family.
    pub limit: f64,
    /// Where the worst violation occurs.
    pub worst: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EeoiPoint {
    pub t: usize,
    /// Fractional indicator; `None` when the ship is stationary.
    pub value: Option<f64>,
    /// The multiplied-out form holds.
    pub transformed_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub tol: f64,
    pub checks: Vec<Check>,
    pub eeoi: Vec<EeoiPoint>,
    /// `Σ V·Δt + D_d - D`, zero when the distance row is tight.
    pub distance_excess: f64,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn violations(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    pub fn check(&self, family: Family) -> Option<&Check> {
        self.checks.iter().find(|c| c.family == family)
    }

    /// Plain-text violation table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<36} {:>12} {:>12}  {}\n", "constraint", "violation", "limit", "worst at");
        for c in &self.checks {
            let mark = if c.passed() { "" } else { "  FAIL" };
            out += &format!(
                "{:<36} {:>12.3e} {:>12.3e}  {}{mark}\n",
                c.family.label(),
                c.max_violation,
                c.limit,
                c.worst
            );
        }
        out
    }
}

struct Tracker {
    checks: Vec<Check>,
    tol: f64,
}

impl Tracker {
    /// Opens a family; `scale` widens the limit for relative checks.
    fn open(&mut self, family: Family, scale: f64) {
        self.checks.push(Check {
            family,
            max_violation: 0.0,
            limit: self.tol * scale.max(1.0),
            worst: String::new(),
        });
    }

    fn record(&mut self, violation: f64, at: impl FnOnce() -> String) {
        let c = self.checks.last_mut().unwrap();
        if violation > c.max_violation || violation.is_nan() {
            c.max_violation = if violation.is_nan() { f64::INFINITY } else { violation };
            c.worst = at();
        }
    }

    fn le(&mut self, lhs: f64, rhs: f64, at: impl FnOnce() -> String) {
        self.record(lhs - rhs, at);
    }

    fn eq(&mut self, lhs: f64, rhs: f64, at: impl FnOnce() -> String) {
        self.record((lhs - rhs).abs(), at);
    }
}

fn check_dims(s: &ShipScenario, part: &IslandPartition, x: &Schedule) -> Result<()> {
    let t = s.horizon();
    let shape = |name: &str, m: usize, rows: Vec<usize>| -> Result<()> {
        if rows.len() != m || rows.iter().any(|&r| r != t) {
            return Err(SpsError::Dimension(format!(
                "{name}: expected {m} rows of {t}, got {rows:?}"
            )));
        }
        Ok(())
    };
    let lens = |m: &Vec<Vec<f64>>| m.iter().map(Vec::len).collect();
    let blens = |m: &Vec<Vec<u8>>| m.iter().map(Vec::len).collect();
    shape("delta_g", s.generators.len(), blens(&x.delta_g))?;
    shape("y_g", s.generators.len(), blens(&x.y_g))?;
    shape("p_g", s.generators.len(), lens(&x.p_g))?;
    shape("p_e", s.esms.len(), lens(&x.p_e))?;
    shape("e_e", s.esms.len(), lens(&x.e_e))?;
    shape("p_pr", s.propulsion.module_count.max(1), lens(&x.p_pr))?;
    shape("rho", part.parts.len(), lens(&x.rho))?;
    shape("s_p", s.topology.zone_count, blens(&x.s_p))?;
    shape("s_s", s.topology.zone_count, blens(&x.s_s))?;
    Ok(())
}

/// Ship speed at interval `t` implied by the propulsion power.
pub fn speed(s: &ShipScenario, x: &Schedule, t: usize) -> f64 {
    s.propulsion.speed_at(x.propulsion_total(t).max(0.0))
}

/// CO₂ emitted at interval `t`.
pub fn co2(s: &ShipScenario, x: &Schedule, t: usize) -> f64 {
    s.generators
        .iter()
        .enumerate()
        .map(|(g, spec)| spec.co2(x.p_g[g][t], f64::from(x.delta_g[g][t]), s.dt()))
        .sum()
}

pub fn verify(s: &ShipScenario, part: &IslandPartition, x: &Schedule, tol: f64) -> Result<ConstraintReport> {
    check_dims(s, part, x)?;
    let t_len = s.horizon();
    let dt = s.dt();
    let mut tr = Tracker { checks: vec![], tol };
    let at_gt = |g: usize, t: usize| move || format!("g{g} t{t}");

    tr.open(Family::Program(Tag::GenLimit), 1.0);
    for (g, spec) in s.generators.iter().enumerate() {
        for t in 0..t_len {
            let (p, d) = (x.p_g[g][t], f64::from(x.delta_g[g][t]));
            tr.le(p, spec.p_max * d, at_gt(g, t));
            tr.le(spec.p_min * d, p, at_gt(g, t));
        }
    }
    tr.open(Family::FailedOffline, 1.0);
    for &g in &part.failed_generators {
        for t in 0..t_len {
            tr.le(f64::from(x.delta_g[g][t]), 0.0, at_gt(g, t));
        }
    }
    tr.open(Family::Program(Tag::Ramp), 1.0);
    for (g, spec) in s.generators.iter().enumerate() {
        if part.is_failed(g) {
            continue;
        }
        let mut prev = spec.initial_power;
        for t in 0..t_len {
            tr.le((x.p_g[g][t] - prev).abs(), spec.ramp_max, at_gt(g, t));
            prev = x.p_g[g][t];
        }
    }
    tr.open(Family::Startup, 1.0);
    for (g, spec) in s.generators.iter().enumerate() {
        let mut prev = u8::from(spec.initial_on);
        for t in 0..t_len {
            let cur = x.delta_g[g][t];
            let want = u8::from(cur == 1 && prev == 0);
            tr.eq(f64::from(x.y_g[g][t]), f64::from(want), at_gt(g, t));
            prev = cur;
        }
    }
    tr.open(Family::MinOnTime, 1.0);
    for (g, spec) in s.generators.iter().enumerate() {
        let on = |t: isize| if t < 0 { u8::from(spec.initial_on) } else { x.delta_g[g][t as usize] };
        for t in 0..t_len {
            if on(t as isize) == 1 && on(t as isize - 1) == 0 {
                for tau in t..(t + spec.t_min_on).min(t_len) {
                    tr.le(1.0, f64::from(x.delta_g[g][tau]), at_gt(g, tau));
                }
            }
        }
    }

    tr.open(Family::Program(Tag::EsmPower), 1.0);
    for (n, spec) in s.esms.iter().enumerate() {
        for t in 0..t_len {
            let p = x.p_e[n][t];
            tr.le(p, spec.p_max, || format!("e{n} t{t}"));
            tr.le(spec.p_min, p, || format!("e{n} t{t}"));
        }
    }
    tr.open(Family::Program(Tag::EsmEnergy), 1.0);
    for (n, spec) in s.esms.iter().enumerate() {
        for t in 0..t_len {
            let e = x.e_e[n][t];
            tr.le(e, spec.e_max, || format!("e{n} t{t}"));
            tr.le(spec.e_min, e, || format!("e{n} t{t}"));
        }
    }
    tr.open(Family::Program(Tag::EsmRecursion), 1.0);
    for (n, spec) in s.esms.iter().enumerate() {
        let mut prev = spec.e_initial;
        for t in 0..t_len {
            tr.eq(x.e_e[n][t], prev - x.p_e[n][t] * dt, || format!("e{n} t{t}"));
            prev = x.e_e[n][t];
        }
    }
    if part.mode == FaultMode::SemiIsland {
        tr.open(Family::Program(Tag::EsmAggregatePower), 1.0);
        for (w, p) in part.parts.iter().enumerate() {
            let sum = |f: &dyn Fn(usize) -> f64| p.esms.iter().map(|&n| f(n)).sum::<f64>();
            for t in 0..t_len {
                let total = sum(&|n| x.p_e[n][t]);
                tr.le(total, sum(&|n| s.esms[n].p_max), || format!("part {w} t{t}"));
                tr.le(sum(&|n| s.esms[n].p_min), total, || format!("part {w} t{t}"));
            }
        }
        tr.open(Family::Program(Tag::EsmAggregateEnergy), 1.0);
        for (w, p) in part.parts.iter().enumerate() {
            let sum = |f: &dyn Fn(usize) -> f64| p.esms.iter().map(|&n| f(n)).sum::<f64>();
            for t in 0..t_len {
                let total = sum(&|n| x.e_e[n][t]);
                tr.le(total, sum(&|n| s.esms[n].e_max), || format!("part {w} t{t}"));
                tr.le(sum(&|n| s.esms[n].e_min), total, || format!("part {w} t{t}"));
            }
        }
    }

    let loads = part_loads(s, part);
    tr.open(Family::Program(Tag::Shed), 1.0);
    for w in 0..part.parts.len() {
        for t in 0..t_len {
            let r = x.rho[w][t];
            tr.le(0.0, r, || format!("part {w} t{t}"));
            tr.le(r, 1.0, || format!("part {w} t{t}"));
        }
    }
    let prop = &s.propulsion;
    tr.open(Family::Program(Tag::PropulsionLimit), 1.0);
    for t in 0..t_len {
        let p = x.propulsion_total(t);
        tr.le(p, prop.p_max(), || format!("t{t}"));
        tr.le(prop.p_min(), p, || format!("t{t}"));
    }

    tr.open(Family::SwitchPair, 1.0);
    for z in 0..s.topology.zone_count {
        for t in 0..t_len {
            let (pb, sb) = (x.s_p[z][t], x.s_s[z][t]);
            let bad = match part.switch_roles[z] {
                SwitchRole::Fixed(Bus::Port) => (pb, sb) != (1, 0),
                SwitchRole::Fixed(Bus::Starboard) => (pb, sb) != (0, 1),
                SwitchRole::Coupled { .. } => pb + sb != 1,
            };
            tr.record(f64::from(u8::from(bad)), || format!("zone {z} t{t}"));
        }
    }
    tr.open(Family::SwitchMinTime, 1.0);
    for &z in &part.coupled_zones {
        let sp = |t: isize| {
            if t < 0 {
                s.topology.switch_initial[z].pb.min(1)
            } else {
                x.s_p[z][t as usize]
            }
        };
        for t in 0..t_len {
            if sp(t as isize) == 1 && sp(t as isize - 1) == 0 {
                for tau in t..(t + s.topology.t_min_switch).min(t_len) {
                    tr.le(1.0, f64::from(x.s_p[z][tau]), || format!("zone {z} t{tau}"));
                }
            }
        }
    }

    tr.open(Family::Program(Tag::Balance), 1.0);
    let zeta = s.topology.converter_efficiency;
    for (w, p) in part.parts.iter().enumerate() {
        for t in 0..t_len {
            let mut supply: f64 = p.generators.iter().map(|&g| zeta * x.p_g[g][t]).sum();
            supply += p.esms.iter().map(|&n| x.p_e[n][t]).sum::<f64>();
            let nv = loads.nonvital[w][t];
            let mut demand = loads.vs[w][t] + nv * (1.0 - x.rho[w][t]);
            if p.propulsion {
                demand += x.propulsion_total(t);
            }
            for &z in &part.coupled_zones {
                let load = s.loads.vs_by_zone[z][t];
                if p.omega_pb.contains(&z) {
                    demand += load * f64::from(x.s_p[z][t]);
                }
                if p.omega_sb.contains(&z) {
                    demand += load * f64::from(x.s_s[z][t]);
                }
            }
            tr.eq(supply, demand, || format!("part {w} t{t}"));
        }
    }

    let eeoi = eeoi_profile(s, x);
    let emit_scale = (0..t_len).map(|t| co2(s, x, t)).fold(0.0, f64::max);
    tr.open(Family::Program(Tag::Eeoi), emit_scale);
    let per_speed = s.voyage.eeoi_max * s.voyage.f_sl * dt;
    for t in 0..t_len {
        tr.le(co2(s, x, t), per_speed * speed(s, x, t), || format!("t{t}"));
    }
    let d = s.voyage.distance;
    tr.open(Family::Program(Tag::Distance), d);
    let sailed: f64 = (0..t_len).map(|t| speed(s, x, t) * dt).sum();
    tr.le(d, sailed + x.d_d, || "horizon".into());
    tr.open(Family::Program(Tag::SlackNonneg), 1.0);
    tr.le(0.0, x.d_d, || "horizon".into());

    Ok(ConstraintReport {
        tol,
        checks: tr.checks,
        eeoi,
        distance_excess: sailed + x.d_d - d,
    })
}

/// Cost components of P4 plus the commitment cost.
pub fn cost_breakdown(s: &ShipScenario, part: &IslandPartition, x: &Schedule, pen: &Penalties) -> CostBreakdown {
    let dt = s.dt();
    let t_len = s.horizon();
    let fuel = s
        .generators
        .iter()
        .enumerate()
        .flat_map(|(g, spec)| (0..t_len).map(move |t| spec.fuel_cost(x.p_g[g][t], f64::from(x.delta_g[g][t]), dt)))
        .sum();
    let esm = pen.xi_e
        * s.esms
            .iter()
            .enumerate()
            .flat_map(|(n, spec)| (0..t_len).map(move |t| spec.life_cycle_cost(x.p_e[n][t], dt)))
            .sum::<f64>();
    let shedding = pen.xi_l * shed_energy(s, part, x);
    let distance = pen.h * x.d_d;
    CostBreakdown {
        fuel,
        esm,
        shedding,
        distance,
        total: fuel + esm + shedding + distance,
    }
}

/// Shed non-vital energy over the horizon, MWh.
pub fn shed_energy(s: &ShipScenario, part: &IslandPartition, x: &Schedule) -> f64 {
    let loads = part_loads(s, part);
    (0..part.parts.len())
        .flat_map(|w| (0..s.horizon()).map(move |t| (w, t)))
        .map(|(w, t)| loads.nonvital[w][t] * x.rho[w][t] * s.dt())
        .sum()
}

pub fn eeoi_profile(s: &ShipScenario, x: &Schedule) -> Vec<EeoiPoint> {
    let dt = s.dt();
    let (limit, f_sl) = (s.voyage.eeoi_max, s.voyage.f_sl);
    (0..s.horizon())
        .map(|t| {
            let v = speed(s, x, t);
            let mass = co2(s, x, t);
            let bound = limit * f_sl * v * dt;
            EeoiPoint {
                t,
                value: (v > 0.0).then(|| mass / (f_sl * v * dt)),
                transformed_ok: mass <= bound + 1e-6 * bound.max(1.0),
            }
        })
        .collect()
}
