//! Builds the relaxed scheduling program for a scenario and its partition.
//!
//! Binaries (commitments and coupled switch positions) are program
//! variables pinned by tagged fixing rows, so one built instance serves every
//! master assignment: only the fixing right-hand sides change per solve.

use serde::Serialize;

use crate::convex::program::{ConvexProgram, Power, Row, RowKind, Tag};
use crate::error::{Result, SpsError};
use crate::fault::{FaultMode, IslandPartition, SwitchRole};
use crate::model::{Bus, Penalties, PropulsionSpec, ShipScenario, VoyageSpec};
use crate::schedule::Schedule;

/// Constant propulsion power whose uniform speed covers the voyage exactly.
pub fn uniform_propulsion_power(voyage: &VoyageSpec, prop: &PropulsionSpec) -> f64 {
    let span = voyage.horizon as f64 * voyage.dt;
    if span <= 0.0 || voyage.distance <= 0.0 {
        return 0.0;
    }
    prop.power_at(voyage.distance / span)
}

/// How stored energy is modelled inside a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EnergyRule {
    /// Full recursion from the given starting energies.
    Recursion { e_start: Vec<f64> },
    /// Per-part discharge caps (`None` = no cap) replace the recursion;
    /// `state` adds per-module bounds from the energy held before the window;
    /// `budget` limits each part's net discharge over the window, MWh.
    Capped {
        caps: Vec<Option<f64>>,
        state: Option<Vec<f64>>,
        budget: Vec<Option<f64>>,
    },
}

/// A contiguous slice of the horizon with its boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Window {
    pub start: usize,
    pub len: usize,
    /// Generator output in the interval before `start`.
    pub prev_power: Vec<f64>,
    pub energy: EnergyRule,
    /// Distance to cover inside the window, nm.
    pub distance: f64,
}

impl Window {
    pub fn full(s: &ShipScenario) -> Self {
        Window {
            start: 0,
            len: s.horizon(),
            prev_power: s.generators.iter().map(|g| g.initial_power).collect(),
            energy: EnergyRule::Recursion {
                e_start: s.esms.iter().map(|e| e.e_initial).collect(),
            },
            distance: s.voyage.distance,
        }
    }
}

/// Values for every binary of an instance, indexed `[g][k]` and `[c][k]`
/// (`c` runs over the partition's coupled zones); `S_S = 1 - S_P`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Assignment {
    pub delta: Vec<Vec<u8>>,
    pub s_p: Vec<Vec<u8>>,
}

impl Assignment {
    /// Columns `start..start+len` of a full-horizon assignment.
    pub fn slice(&self, start: usize, len: usize) -> Assignment {
        let cut = |m: &Vec<Vec<u8>>| m.iter().map(|r| r[start..start + len].to_vec()).collect();
        Assignment {
            delta: cut(&self.delta),
            s_p: cut(&self.s_p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarMap {
    pub delta: Vec<Vec<usize>>,
    pub p_g: Vec<Vec<usize>>,
    pub p_e: Vec<Vec<usize>>,
    /// Empty when the window uses capped energy.
    pub e_e: Vec<Vec<usize>>,
    pub p_pr: Vec<usize>,
    /// Auxiliary speed with `α·u^β <= P_PR`.
    pub speed: Vec<usize>,
    pub rho: Vec<Vec<usize>>,
    pub s_p: Vec<Vec<usize>>,
    pub s_s: Vec<Vec<usize>>,
    pub d_d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    /// δ, y, S_P, S_S over the window (switch-change indicators excluded).
    pub binaries: usize,
    pub continuous: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInstance {
    pub scenario: ShipScenario,
    pub partition: IslandPartition,
    pub penalties: Penalties,
    pub window: Window,
    pub program: ConvexProgram,
    pub vars: VarMap,
    pub fix_delta: Vec<Vec<usize>>,
    pub fix_sp: Vec<Vec<usize>>,
    pub fix_ss: Vec<Vec<usize>>,
    pub counts: Counts,
}

/// Per-part, per-interval demand seen by the balance rows.
pub struct PartLoads {
    /// Vital/semi-vital demand of zones the part always serves.
    pub vs: Vec<Vec<f64>>,
    pub nonvital: Vec<Vec<f64>>,
}

pub fn part_loads(s: &ShipScenario, part: &IslandPartition) -> PartLoads {
    let t_len = s.horizon();
    let w_len = part.parts.len();
    let mut vs = vec![vec![0.0; t_len]; w_len];
    let mut nonvital = vec![vec![0.0; t_len]; w_len];
    for (w, p) in part.parts.iter().enumerate() {
        for t in 0..t_len {
            vs[w][t] = p.zones.iter().map(|&z| s.loads.vs_by_zone[z][t]).sum();
            nonvital[w][t] = p.nonvital.iter().map(|&b| s.loads.nonvital[b].profile[t]).sum();
        }
    }
    PartLoads { vs, nonvital }
}

/// Full-horizon instance.
pub fn build(s: &ShipScenario, partition: &IslandPartition) -> Result<ProblemInstance> {
    build_window(s, partition, &Window::full(s))
}

pub fn build_window(
    s: &ShipScenario,
    partition: &IslandPartition,
    win: &Window,
) -> Result<ProblemInstance> {
    let pen = s.penalties()?;
    let dt = s.dt();
    let n_gen = s.generators.len();
    let n_esm = s.esms.len();
    let n_part = partition.parts.len();
    let coupled = &partition.coupled_zones;
    let k_len = win.len;
    if win.start + k_len > s.horizon() || k_len == 0 {
        return Err(SpsError::Dimension(format!(
            "window {}..{} outside horizon {}",
            win.start,
            win.start + k_len,
            s.horizon()
        )));
    }
    if win.prev_power.len() != n_gen {
        return Err(SpsError::Dimension("prev_power length".into()));
    }
    let prop = &s.propulsion;
    if prop.beta < 1.0 || !(prop.alpha > 0.0) {
        return Err(SpsError::Validation(
            "propulsion law must be convex (alpha > 0, beta >= 1)".into(),
        ));
    }
    if s.generators.iter().any(|g| g.cost_a < 0.0 || g.co2_a < 0.0)
        || s.esms.iter().any(|e| e.lc_a < 0.0)
    {
        return Err(SpsError::Validation("quadratic coefficients must be >= 0".into()));
    }
    let loads = part_loads(s, partition);
    let zeta = s.topology.converter_efficiency;

    let mut p = ConvexProgram::new();
    let grid = |p: &mut ConvexProgram, n: usize, name: &str| -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| {
                (0..k_len)
                    .map(|k| p.add_var(format!("{name}[{i}][{}]", win.start + k)))
                    .collect()
            })
            .collect()
    };
    let delta = grid(&mut p, n_gen, "delta");
    let p_g = grid(&mut p, n_gen, "p_g");
    let p_e = grid(&mut p, n_esm, "p_e");
    let e_e = match win.energy {
        EnergyRule::Recursion { .. } => grid(&mut p, n_esm, "e_e"),
        EnergyRule::Capped { .. } => vec![],
    };
    let p_pr: Vec<usize> = (0..k_len)
        .map(|k| p.add_var(format!("p_pr[{}]", win.start + k)))
        .collect();
    let speed: Vec<usize> = (0..k_len)
        .map(|k| p.add_var(format!("v[{}]", win.start + k)))
        .collect();
    let rho = grid(&mut p, n_part, "rho");
    let s_p = grid(&mut p, coupled.len(), "s_p");
    let s_s = grid(&mut p, coupled.len(), "s_s");
    let d_d = p.add_var("d_d");

    // Objective.
    for (g, spec) in s.generators.iter().enumerate() {
        for k in 0..k_len {
            p.obj_quad[p_g[g][k]] = spec.cost_a * dt;
            p.obj_lin[p_g[g][k]] = spec.cost_b * dt;
        }
    }
    for (n, spec) in s.esms.iter().enumerate() {
        for k in 0..k_len {
            p.obj_quad[p_e[n][k]] = pen.xi_e * spec.lc_a * dt;
            p.obj_const += pen.xi_e * spec.lc_c * dt;
        }
    }
    for w in 0..n_part {
        for k in 0..k_len {
            p.obj_lin[rho[w][k]] = pen.xi_l * loads.nonvital[w][win.start + k] * dt;
        }
    }
    p.obj_lin[d_d] = pen.h;

    // Generators.
    for (g, spec) in s.generators.iter().enumerate() {
        let failed = partition.is_failed(g);
        for k in 0..k_len {
            let (pg, dg) = (p_g[g][k], delta[g][k]);
            p.add_row(Row::le(Tag::GenLimit, vec![(pg, 1.0), (dg, -spec.p_max)], 0.0).at(k).of(g));
            p.add_row(Row::le(Tag::GenLimit, vec![(dg, spec.p_min), (pg, -1.0)], 0.0).at(k).of(g));
            if failed {
                continue;
            }
            let r = spec.ramp_max;
            if k == 0 {
                let prev = win.prev_power[g];
                p.add_row(Row::le(Tag::Ramp, vec![(pg, 1.0)], r + prev).at(k).of(g));
                p.add_row(Row::le(Tag::Ramp, vec![(pg, -1.0)], r - prev).at(k).of(g));
            } else {
                let prev = p_g[g][k - 1];
                p.add_row(Row::le(Tag::Ramp, vec![(pg, 1.0), (prev, -1.0)], r).at(k).of(g));
                p.add_row(Row::le(Tag::Ramp, vec![(prev, 1.0), (pg, -1.0)], r).at(k).of(g));
            }
        }
    }

    // Energy storage.
    for (n, spec) in s.esms.iter().enumerate() {
        for k in 0..k_len {
            let pe = p_e[n][k];
            p.add_row(Row::le(Tag::EsmPower, vec![(pe, 1.0)], spec.p_max).at(k).of(n));
            p.add_row(Row::le(Tag::EsmPower, vec![(pe, -1.0)], -spec.p_min).at(k).of(n));
            match &win.energy {
                EnergyRule::Recursion { e_start } => {
                    let e = e_e[n][k];
                    p.add_row(Row::le(Tag::EsmEnergy, vec![(e, 1.0)], spec.e_max).at(k).of(n));
                    p.add_row(Row::le(Tag::EsmEnergy, vec![(e, -1.0)], -spec.e_min).at(k).of(n));
                    // E(t) = E(t-1) - P_e(t)·Δt, discharge positive.
                    let row = if k == 0 {
                        Row::eq(Tag::EsmRecursion, vec![(e, 1.0), (pe, dt)], e_start[n])
                    } else {
                        Row::eq(Tag::EsmRecursion, vec![(e, 1.0), (e_e[n][k - 1], -1.0), (pe, dt)], 0.0)
                    };
                    p.add_row(row.at(k).of(n));
                }
                EnergyRule::Capped { state: Some(e_prev), .. } => {
                    let hi = (e_prev[n] - spec.e_min) / dt;
                    let lo = (e_prev[n] - spec.e_max) / dt;
                    p.add_row(Row::le(Tag::EsmEnergy, vec![(pe, 1.0)], hi).at(k).of(n));
                    p.add_row(Row::le(Tag::EsmEnergy, vec![(pe, -1.0)], -lo).at(k).of(n));
                }
                EnergyRule::Capped { state: None, .. } => {}
            }
        }
    }
    if let EnergyRule::Capped { caps, state, budget } = &win.energy {
        for (w, part) in partition.parts.iter().enumerate() {
            // A budget looser than the power limits or the cap adds nothing.
            let loosest = part.esms.iter().map(|&n| s.esms[n].p_max).sum::<f64>().min(
                caps.get(w).copied().flatten().unwrap_or(f64::INFINITY),
            ) * dt * k_len as f64;
            if let Some(b) = budget.get(w).copied().flatten().filter(|&b| !part.esms.is_empty() && b < loosest) {
                let lin = (0..k_len)
                    .flat_map(|k| part.esms.iter().map(move |&n| (n, k)))
                    .map(|(n, k)| (p_e[n][k], dt))
                    .collect();
                p.add_row(Row::le(Tag::EsmCap, lin, b).of(w));
            }
            let Some(cap) = caps.get(w).copied().flatten() else {
                continue;
            };
            if part.esms.is_empty() {
                continue;
            }
            // Never demand more charging than the modules can absorb.
            let floor: f64 = part
                .esms
                .iter()
                .map(|&n| {
                    let spec = &s.esms[n];
                    match state {
                        Some(e) => spec.p_min.max((e[n] - spec.e_max) / dt),
                        None => spec.p_min,
                    }
                })
                .sum();
            let lin = (0..k_len)
                .flat_map(|k| part.esms.iter().map(move |&n| (n, k)))
                .map(|(n, k)| (p_e[n][k], 1.0))
                .collect();
            p.add_row(Row::le(Tag::EsmCap, lin, cap.max(floor)).of(w));
        }
    }
    if partition.mode == FaultMode::SemiIsland {
        if let EnergyRule::Recursion { .. } = win.energy {
            for (w, part) in partition.parts.iter().enumerate() {
                if part.esms.is_empty() {
                    continue;
                }
                let sum = |f: fn(&crate::model::EsmSpec) -> f64| -> f64 {
                    part.esms.iter().map(|&n| f(&s.esms[n])).sum()
                };
                for k in 0..k_len {
                    let pe: Vec<(usize, f64)> = part.esms.iter().map(|&n| (p_e[n][k], 1.0)).collect();
                    let neg = |v: &Vec<(usize, f64)>| v.iter().map(|&(j, c)| (j, -c)).collect();
                    let ee: Vec<(usize, f64)> = part.esms.iter().map(|&n| (e_e[n][k], 1.0)).collect();
                    p.add_row(Row::le(Tag::EsmAggregatePower, pe.clone(), sum(|e| e.p_max)).at(k).of(w));
                    p.add_row(Row::le(Tag::EsmAggregatePower, neg(&pe), -sum(|e| e.p_min)).at(k).of(w));
                    p.add_row(Row::le(Tag::EsmAggregateEnergy, ee.clone(), sum(|e| e.e_max)).at(k).of(w));
                    p.add_row(Row::le(Tag::EsmAggregateEnergy, neg(&ee), -sum(|e| e.e_min)).at(k).of(w));
                }
            }
        }
    }

    // Shedding, propulsion, speed.
    for w in 0..n_part {
        for k in 0..k_len {
            let has_load = loads.nonvital[w][win.start + k] > 0.0;
            let r = rho[w][k];
            p.add_row(Row::le(Tag::Shed, vec![(r, -1.0)], 0.0).at(k).of(w));
            p.add_row(Row::le(Tag::Shed, vec![(r, 1.0)], if has_load { 1.0 } else { 0.0 }).at(k).of(w));
        }
    }
    for k in 0..k_len {
        p.add_row(Row::le(Tag::PropulsionLimit, vec![(p_pr[k], 1.0)], prop.p_max()).at(k));
        p.add_row(Row::le(Tag::PropulsionLimit, vec![(p_pr[k], -1.0)], -prop.p_min()).at(k));
        p.add_row(Row::le(Tag::SpeedLimit, vec![(speed[k], -1.0)], 0.0).at(k));
        p.add_row(Row::le(Tag::SpeedLimit, vec![(speed[k], 1.0)], prop.v_max).at(k));
        p.add_row(Row {
            power: Some(Power {
                var: speed[k],
                alpha: prop.alpha,
                beta: prop.beta,
            }),
            ..Row::le(Tag::SpeedLink, vec![(p_pr[k], -1.0)], 0.0).at(k)
        });
    }

    // Balance per part.
    for (w, part) in partition.parts.iter().enumerate() {
        for k in 0..k_len {
            let t = win.start + k;
            let mut lin: Vec<(usize, f64)> = vec![];
            lin.extend(part.generators.iter().map(|&g| (p_g[g][k], zeta)));
            lin.extend(part.esms.iter().map(|&n| (p_e[n][k], 1.0)));
            if part.propulsion {
                lin.push((p_pr[k], -1.0));
            }
            let nv = loads.nonvital[w][t];
            if nv > 0.0 {
                lin.push((rho[w][k], nv));
            }
            for (c, &z) in coupled.iter().enumerate() {
                let load = s.loads.vs_by_zone[z][t];
                if part.omega_pb.contains(&z) {
                    lin.push((s_p[c][k], -load));
                }
                if part.omega_sb.contains(&z) {
                    lin.push((s_s[c][k], -load));
                }
            }
            p.add_row(Row::eq(Tag::Balance, lin, loads.vs[w][t] + nv).at(k).of(w));
        }
    }

    // EEOI and distance.
    let eeoi_speed = s.voyage.eeoi_max * s.voyage.f_sl * dt;
    for k in 0..k_len {
        let mut lin = vec![(speed[k], -eeoi_speed)];
        let mut quad = vec![];
        for (g, spec) in s.generators.iter().enumerate() {
            lin.push((p_g[g][k], spec.co2_b * dt));
            lin.push((delta[g][k], spec.co2_c * dt));
            if spec.co2_a > 0.0 {
                quad.push((p_g[g][k], spec.co2_a * dt));
            }
        }
        p.add_row(Row {
            quad,
            ..Row::le(Tag::Eeoi, lin, 0.0).at(k)
        });
    }
    let mut lin: Vec<(usize, f64)> = speed.iter().map(|&v| (v, -dt)).collect();
    lin.push((d_d, -1.0));
    p.add_row(Row::le(Tag::Distance, lin, -win.distance));
    p.add_row(Row::le(Tag::SlackNonneg, vec![(d_d, -1.0)], 0.0));

    // Fixing rows; right-hand sides are set per assignment.
    let fix = |p: &mut ConvexProgram, m: &Vec<Vec<usize>>| -> Vec<Vec<usize>> {
        m.iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(k, &j)| p.add_row(Row::eq(Tag::Fix, vec![(j, 1.0)], 0.0).at(k).of(i)))
                    .collect()
            })
            .collect()
    };
    let fix_delta = fix(&mut p, &delta);
    let fix_sp = fix(&mut p, &s_p);
    let fix_ss = fix(&mut p, &s_s);

    for r in &p.rows {
        debug_assert!(r.kind == RowKind::Le || r.is_linear());
    }
    let binaries = (2 * n_gen + 2 * coupled.len()) * k_len;
    let counts = Counts {
        binaries,
        continuous: p.n() - n_gen * k_len - 2 * coupled.len() * k_len,
        rows: p.rows.len(),
    };
    Ok(ProblemInstance {
        scenario: s.clone(),
        partition: partition.clone(),
        penalties: pen,
        window: win.clone(),
        program: p,
        vars: VarMap {
            delta,
            p_g,
            p_e,
            e_e,
            p_pr,
            speed,
            rho,
            s_p,
            s_s,
            d_d,
        },
        fix_delta,
        fix_sp,
        fix_ss,
        counts,
    })
}

impl ProblemInstance {
    pub fn len(&self) -> usize {
        self.window.len
    }

    pub fn is_empty(&self) -> bool {
        self.window.len == 0
    }

    /// Free commitment decisions: healthy generators and coupled switches.
    pub fn free_binaries(&self) -> usize {
        let healthy = (0..self.scenario.generators.len())
            .filter(|&g| !self.partition.is_failed(g))
            .count();
        (healthy + self.partition.coupled_zones.len()) * self.len()
    }

    /// Families with at least one continuous variable (the auxiliary speed
    /// is not listed; it only linearises the propulsion law).
    pub fn continuous_families(&self) -> Vec<&'static str> {
        let v = &self.vars;
        let mut out = vec![];
        if !v.p_g.is_empty() {
            out.push("p_g");
        }
        if !v.p_e.is_empty() {
            out.push("p_e");
        }
        if !v.e_e.is_empty() {
            out.push("e_e");
        }
        out.push("p_pr");
        out.push("rho");
        out.push("d_d");
        out
    }

    pub fn binary_families(&self) -> Vec<&'static str> {
        let mut out = vec!["delta", "y"];
        if !self.partition.coupled_zones.is_empty() {
            out.extend(["s_p", "s_s"]);
        }
        out
    }

    /// Copy of the program with fixing rows set to `a`.
    pub fn program_with(&self, a: &Assignment) -> ConvexProgram {
        let mut p = self.program.clone();
        for (g, rows) in self.fix_delta.iter().enumerate() {
            for (k, &r) in rows.iter().enumerate() {
                p.rows[r].rhs = f64::from(a.delta[g][k]);
            }
        }
        for (c, rows) in self.fix_sp.iter().enumerate() {
            for (k, &r) in rows.iter().enumerate() {
                let sp = a.s_p[c][k];
                p.rows[r].rhs = f64::from(sp);
                p.rows[self.fix_ss[c][k]].rhs = f64::from(1 - sp);
            }
        }
        p
    }

    /// Commitment cost `Σ c·δ·Δt` of an assignment over this window.
    pub fn commitment_cost(&self, a: &Assignment) -> f64 {
        let dt = self.scenario.dt();
        self.scenario
            .generators
            .iter()
            .enumerate()
            .map(|(g, spec)| a.delta[g].iter().map(|&d| spec.cost_c * f64::from(d) * dt).sum::<f64>())
            .sum()
    }

    /// Assignment with every healthy generator online and switches at their
    /// initial positions where coupled.
    pub fn default_assignment(&self) -> Assignment {
        let k_len = self.len();
        let delta = (0..self.scenario.generators.len())
            .map(|g| vec![u8::from(!self.partition.is_failed(g)); k_len])
            .collect();
        let s_p = self
            .partition
            .coupled_zones
            .iter()
            .map(|&z| vec![self.scenario.topology.switch_initial[z].pb.min(1); k_len])
            .collect();
        Assignment { delta, s_p }
    }

    /// Write the window's part of a solved point into `out`.
    pub fn extract(&self, a: &Assignment, x: &[f64], out: &mut Schedule) {
        let s = &self.scenario;
        let v = &self.vars;
        let modules = s.propulsion.module_count.max(1) as f64;
        let loads = part_loads(s, &self.partition);
        for k in 0..self.len() {
            let t = self.window.start + k;
            for g in 0..s.generators.len() {
                out.delta_g[g][t] = a.delta[g][k];
                out.p_g[g][t] = if a.delta[g][k] == 1 { x[v.p_g[g][k]] } else { 0.0 };
            }
            for n in 0..s.esms.len() {
                out.p_e[n][t] = x[v.p_e[n][k]];
                if !v.e_e.is_empty() {
                    out.e_e[n][t] = x[v.e_e[n][k]];
                }
            }
            for r in out.p_pr.iter_mut() {
                r[t] = x[v.p_pr[k]] / modules;
            }
            for w in 0..self.partition.parts.len() {
                out.rho[w][t] = if loads.nonvital[w][t] > 0.0 {
                    x[v.rho[w][k]].clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
            for z in 0..s.topology.zone_count {
                let (pb, sb) = match self.partition.switch_roles[z] {
                    SwitchRole::Fixed(Bus::Port) => (1, 0),
                    SwitchRole::Fixed(Bus::Starboard) => (0, 1),
                    SwitchRole::Coupled { .. } => {
                        let c = self.partition.coupled_zones.iter().position(|&q| q == z).unwrap();
                        (a.s_p[c][k], 1 - a.s_p[c][k])
                    }
                };
                out.s_p[z][t] = pb;
                out.s_s[z][t] = sb;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::partition;
    use crate::fixtures;

    #[test]
    fn uniform_power_examples() {
        let s = fixtures::case1(120.0);
        let p = uniform_propulsion_power(&s.voyage, &s.propulsion);
        assert!((p - 3.8016).abs() < 1e-9, "{p}");
        let s170 = s.with_distance(170.0);
        let p = uniform_propulsion_power(&s170.voyage, &s170.propulsion);
        assert!((p - 10.8086).abs() < 1e-9, "{p}");
        assert_eq!(uniform_propulsion_power(&s.with_distance(0.0).voyage, &s.propulsion), 0.0);
    }

    #[test]
    fn semi_island_binary_count() {
        let s = fixtures::case1(120.0);
        let inst = build(&s, &partition(&s).unwrap()).unwrap();
        assert_eq!(inst.counts.binaries, 100);
        assert_eq!(inst.free_binaries(), 50);
    }

    #[test]
    fn island_binary_count() {
        let s = fixtures::case2(160.0);
        let part = partition(&s).unwrap();
        assert_eq!(part.mode, FaultMode::Island);
        assert_eq!(build(&s, &part).unwrap().counts.binaries, 72);
    }

    #[test]
    fn every_row_is_tagged_and_labelled() {
        let s = fixtures::case1(120.0);
        let inst = build(&s, &partition(&s).unwrap()).unwrap();
        for r in &inst.program.rows {
            assert!(!r.tag.label().is_empty());
        }
        let eeoi = inst.program.rows.iter().filter(|r| r.tag == Tag::Eeoi).count();
        assert_eq!(eeoi, s.horizon());
    }
}
