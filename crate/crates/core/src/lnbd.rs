//! Low-complexity near-optimal Benders variant.
//!
//! The continuous subproblem is split into one problem per interval:
//! storage is limited by per-part discharge caps instead of the energy
//! recursion, and the voyage by per-interval distance targets. The
//! intervals are solved in sequence and their cuts summed into one.

use std::collections::HashSet;
use std::time::Instant;

use serde::Serialize;

use crate::benders::{assemble, report};
use crate::convex::subproblem::{solve_subproblem, FeasibilityCut, Sensitivities, SubStatus};
use crate::error::{Result, SpsError};
use crate::master::Master;
use crate::par::Execution;
use crate::problem::{build_window, part_loads, uniform_propulsion_power, Assignment, EnergyRule, ProblemInstance, Window};
use crate::schedule::{Algorithm, Schedule, SolveReport};

const ZERO_SHORTFALL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LnbdConfig {
    /// Per-interval storage/propulsion split, each in `[0, 1]`; the last is 1.
    pub phi: Vec<f64>,
    pub epsilon: f64,
    pub max_outer_iter: usize,
    pub max_distance_update_iter: usize,
    pub exec: Execution,
}

impl LnbdConfig {
    /// Constant `phi` with the final interval at 1.
    pub fn constant(phi: f64, horizon: usize) -> Self {
        let mut v = vec![phi; horizon];
        if let Some(last) = v.last_mut() {
            *last = 1.0;
        }
        LnbdConfig {
            phi: v,
            epsilon: 1e-2,
            max_outer_iter: 500,
            max_distance_update_iter: 50,
            exec: Execution::default(),
        }
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.phi.len() != horizon {
            return Err(SpsError::Config(format!(
                "phi has {} entries, horizon is {horizon}",
                self.phi.len()
            )));
        }
        if let Some(p) = self.phi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(SpsError::Config(format!("phi value {p} outside [0, 1]")));
        }
        if self.phi.last() != Some(&1.0) {
            return Err(SpsError::Config("the last phi must be 1 to complete the voyage".into()));
        }
        Ok(())
    }
}

/// Per-interval targets and caps derived from the load forecast.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSplit {
    /// Distance target per interval, nm.
    pub distance: Vec<f64>,
    /// Discharge cap per interval and part, applied while the part has a
    /// generator online; `None` for parts without storage.
    pub caps: Vec<Vec<Option<f64>>>,
    pub warnings: Vec<String>,
}

pub fn decompose_time(inst: &ProblemInstance, cfg: &LnbdConfig) -> Result<TimeSplit> {
    let s = &inst.scenario;
    let part = &inst.partition;
    let t_len = s.horizon();
    cfg.validate(t_len)?;
    let dt = s.dt();
    let loads = part_loads(s, part);
    let deviation: Vec<Vec<f64>> = (0..part.parts.len())
        .map(|w| {
            let total: Vec<f64> = (0..t_len).map(|t| loads.vs[w][t] + loads.nonvital[w][t]).collect();
            let mean = total.iter().sum::<f64>() / t_len as f64;
            total.iter().map(|l| l - mean).collect()
        })
        .collect();
    let mut warnings = vec![];

    let caps = (0..t_len)
        .map(|t| {
            part.parts
                .iter()
                .enumerate()
                .map(|(w, p)| {
                    if p.esms.is_empty() {
                        return None;
                    }
                    let usable: f64 = p.esms.iter().map(|&n| s.esms[n].e_initial - s.esms[n].e_min).sum();
                    Some(usable / (t_len as f64 * dt) + cfg.phi[t] * deviation[w][t])
                })
                .collect()
        })
        .collect();

    let prop = &s.propulsion;
    let p_bar = uniform_propulsion_power(&s.voyage, prop);
    let dev = &deviation[part.propulsion_part];
    let mut distance: Vec<f64> = (0..t_len)
        .map(|t| {
            let arg = p_bar - (1.0 - cfg.phi[t]) * dev[t];
            if arg < 0.0 {
                warnings.push(format!("interval {t}: negative propulsion share {arg:.4} clamped to 0"));
            }
            prop.speed_at(arg.max(0.0)) * dt
        })
        .collect();
    let sum: f64 = distance.iter().sum();
    if sum > 0.0 {
        let scale = s.voyage.distance / sum;
        distance.iter_mut().for_each(|d| *d *= scale);
    }
    Ok(TimeSplit { distance, caps, warnings })
}

/// Spreads the total shortfall over every interval when only some fell
/// short; returns `None` when the inner loop should stop.
pub fn update_distance_targets(shortfall: &[f64], targets: &[f64]) -> Option<Vec<f64>> {
    let short = shortfall.iter().filter(|&&d| d > ZERO_SHORTFALL).count();
    if short == 0 || short == shortfall.len() {
        return None;
    }
    let add = shortfall.iter().sum::<f64>() / shortfall.len() as f64;
    Some(targets.iter().map(|d| d + add).collect())
}

/// One pass over the intervals for a fixed assignment.
struct Pass {
    schedule: Schedule,
    /// Subproblem cost summed over intervals.
    cost: f64,
    lambda: Sensitivities,
    shortfall: Vec<f64>,
    repairs: usize,
    kkt_max: f64,
}

enum PassResult {
    Priced(Pass),
    Infeasible(FeasibilityCut),
    /// A part runs out of stored energy before the horizon ends.
    Starved,
    /// Local solve failed or left no certificate.
    Failed,
}

fn widen(local: &Sensitivities, t: usize, into: &mut Sensitivities) {
    for (g, row) in local.delta.iter().enumerate() {
        into.delta[g][t] += row[0];
    }
    for (c, row) in local.s_p.iter().enumerate() {
        into.s_p[c][t] += row[0];
        into.s_s[c][t] += local.s_s[c][0];
    }
}

fn zero_sensitivities(inst: &ProblemInstance) -> Sensitivities {
    let t = inst.len();
    Sensitivities {
        delta: vec![vec![0.0; t]; inst.scenario.generators.len()],
        s_p: vec![vec![0.0; t]; inst.partition.coupled_zones.len()],
        s_s: vec![vec![0.0; t]; inst.partition.coupled_zones.len()],
    }
}

/// Energy each part needs from interval `t` on (index `T` is zero) to
/// carry its least demand through the intervals it has no generator online.
fn reserves(inst: &ProblemInstance, a: &Assignment) -> Vec<Vec<f64>> {
    let s = &inst.scenario;
    let part = &inst.partition;
    let loads = part_loads(s, part);
    let t_len = s.horizon();
    part.parts
        .iter()
        .enumerate()
        .map(|(w, p)| {
            let need: Vec<f64> = (0..t_len)
                .map(|t| {
                    if p.esms.is_empty() || p.generators.iter().any(|&g| a.delta[g][t] == 1) {
                        return 0.0;
                    }
                    let routed: f64 = part
                        .coupled_zones
                        .iter()
                        .enumerate()
                        .map(|(c, &z)| {
                            let here = (p.omega_pb.contains(&z) && a.s_p[c][t] == 1)
                                || (p.omega_sb.contains(&z) && a.s_p[c][t] == 0);
                            if here {
                                s.loads.vs_by_zone[z][t]
                            } else {
                                0.0
                            }
                        })
                        .sum();
                    let prop = if p.propulsion { s.propulsion.p_min() } else { 0.0 };
                    (loads.vs[w][t] + routed + prop).max(0.0) * s.dt()
                })
                .collect();
            let mut from = vec![0.0; t_len + 1];
            for t in (0..t_len).rev() {
                from[t] = from[t + 1] + need[t];
            }
            from
        })
        .collect()
}

fn solve_pass(inst: &ProblemInstance, a: &Assignment, split: &TimeSplit, targets: &[f64]) -> Result<PassResult> {
    let s = &inst.scenario;
    let part = &inst.partition;
    let dt = s.dt();
    let reserve = reserves(inst, a);
    let mut sched = Schedule::zeros(s, part.parts.len());
    let mut prev_power: Vec<f64> = s.generators.iter().map(|g| g.initial_power).collect();
    let mut energy: Vec<f64> = s.esms.iter().map(|e| e.e_initial).collect();
    let mut lambda = zero_sensitivities(inst);
    let (mut cost, mut repairs, mut kkt_max) = (0.0, 0, 0.0_f64);
    let mut shortfall = vec![0.0; s.horizon()];

    for t in 0..s.horizon() {
        let local = a.slice(t, 1);
        let caps: Vec<Option<f64>> = part
            .parts
            .iter()
            .enumerate()
            .map(|(w, p)| {
                let online = p.generators.iter().any(|&g| local.delta[g][0] == 1);
                split.caps[t][w].filter(|_| online)
            })
            .collect();
        let held: Vec<f64> = part
            .parts
            .iter()
            .map(|p| p.esms.iter().map(|&n| energy[n] - s.esms[n].e_min).sum())
            .collect();
        if (0..held.len()).any(|w| held[w] + 1e-9 < reserve[w][t]) {
            return Ok(PassResult::Starved);
        }
        let budget: Vec<Option<f64>> = (0..held.len())
            .map(|w| (!part.parts[w].esms.is_empty()).then(|| {
                // Snap rounding noise so a spent budget reads as exactly zero.
                let b = held[w] - reserve[w][t + 1];
                if b < 1e-9 { 0.0 } else { b }
            }))
            .collect();
        let mut window = Window {
            start: t,
            len: 1,
            prev_power: prev_power.clone(),
            energy: EnergyRule::Capped { caps: caps.clone(), state: None, budget: budget.clone() },
            distance: targets[t],
        };
        let mut repaired = false;
        let (w_inst, sol) = loop {
            let w_inst = build_window(s, part, &window)?;
            let sol = solve_subproblem(&w_inst, &local);
            if sol.status != SubStatus::Optimal || repaired {
                break (w_inst, sol);
            }
            // Caps alone may drain or overfill a module: re-solve with the
            // energy actually held.
            let ok = w_inst.vars.p_e.iter().enumerate().all(|(n, row)| {
                let e = energy[n] - sol.x[row[0]] * dt;
                e >= s.esms[n].e_min - 1e-9 && e <= s.esms[n].e_max + 1e-9
            });
            if ok {
                break (w_inst, sol);
            }
            repaired = true;
            repairs += 1;
            window.energy = EnergyRule::Capped { caps: caps.clone(), state: Some(energy.clone()), budget: budget.clone() };
        };
        match sol.status {
            SubStatus::Optimal => {}
            SubStatus::Infeasible => {
                let Some(cut) = sol.cut else {
                    return Ok(PassResult::Failed);
                };
                let mut wide = zero_sensitivities(inst);
                widen(&cut.lambda, t, &mut wide);
                return Ok(PassResult::Infeasible(FeasibilityCut {
                    value: cut.value,
                    lambda: wide,
                    at: a.clone(),
                }));
            }
            SubStatus::NumericalFailure => return Ok(PassResult::Failed),
        }
        kkt_max = kkt_max.max(sol.kkt.max());
        cost += sol.objective;
        widen(&sol.lambda, t, &mut lambda);
        w_inst.extract(&local, &sol.x, &mut sched);
        let v = &w_inst.vars;
        for (n, e) in energy.iter_mut().enumerate() {
            *e -= sol.x[v.p_e[n][0]] * dt;
            sched.e_e[n][t] = *e;
        }
        for (g, p) in prev_power.iter_mut().enumerate() {
            *p = sched.p_g[g][t];
        }
        shortfall[t] = sol.x[v.d_d].max(0.0);
    }
    let sailed: f64 = (0..s.horizon()).map(|t| crate::verify::speed(s, &sched, t) * dt).sum();
    sched.d_d = (s.voyage.distance - sailed).max(0.0);
    sched.fill_startups(s);
    Ok(PassResult::Priced(Pass {
        schedule: sched,
        cost,
        lambda,
        shortfall,
        repairs,
        kkt_max,
    }))
}

pub fn run(inst: &ProblemInstance, cfg: &LnbdConfig) -> Result<(Schedule, SolveReport)> {
    let started = Instant::now();
    if inst.window.start != 0 || inst.len() != inst.scenario.horizon() {
        return Err(SpsError::Dimension("LNBD needs a full-horizon instance".into()));
    }
    let split = decompose_time(inst, cfg)?;
    let mut notes = split.warnings.clone();
    let mut master = Master::new(inst)?;
    let mut best: Option<(f64, Schedule)> = None;
    let mut lower = f64::NEG_INFINITY;
    let (mut uppers, mut lowers) = (vec![], vec![]);
    let (mut repairs, mut kkt_max, mut iterations, mut fallbacks) = (0, 0.0_f64, 0, 0);
    let mut converged = false;
    let mut priced: HashSet<Vec<u8>> = HashSet::new();

    while iterations < cfg.max_outer_iter {
        iterations += 1;
        let proposal = match master.solve(cfg.exec) {
            Ok(p) => p,
            Err(SpsError::MasterInfeasible(msg)) => {
                let Some((value, _)) = &best else {
                    return Err(SpsError::MasterInfeasible(msg));
                };
                uppers.push(*value);
                lowers.push(*value);
                converged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        lower = lower.max(proposal.objective);
        let a = proposal.assignment;
        let repeated = !priced.insert(proposal.x.clone());
        if !repeated {
            let mut targets = split.distance.clone();
            let mut inner = 0;
            let pass = loop {
                inner += 1;
                let result = solve_pass(inst, &a, &split, &targets)?;
                let PassResult::Priced(pass) = result else {
                    break result;
                };
                match update_distance_targets(&pass.shortfall, &targets) {
                    Some(next) if inner < cfg.max_distance_update_iter => targets = next,
                    Some(_) => {
                        notes.push(format!("iteration {iterations}: distance-update cap reached"));
                        break PassResult::Priced(pass);
                    }
                    None => break PassResult::Priced(pass),
                }
            };
            match pass {
                PassResult::Priced(pass) => {
                    repairs += pass.repairs;
                    kkt_max = kkt_max.max(pass.kkt_max);
                    master.add_optimality_cut(pass.cost, &pass.lambda, &a);
                    let value = inst.commitment_cost(&a) + pass.cost;
                    if best.as_ref().is_none_or(|b| value < b.0) {
                        best = Some((value, pass.schedule));
                    }
                }
                PassResult::Infeasible(cut) => {
                    if !master.add_feasibility_cut(&cut) {
                        master.add_no_good(&a);
                    }
                }
                PassResult::Starved | PassResult::Failed => {
                    // Storage shortfalls span intervals, which one local
                    // certificate cannot express: price the assignment with
                    // the coupled subproblem instead.
                    fallbacks += 1;
                    let sub = solve_subproblem(inst, &a);
                    match sub.status {
                        SubStatus::Optimal => {
                            kkt_max = kkt_max.max(sub.kkt.max());
                            master.add_optimality_cut(sub.objective, &sub.lambda, &a);
                            let value = inst.commitment_cost(&a) + sub.objective;
                            if best.as_ref().is_none_or(|b| value < b.0) {
                                best = Some((value, assemble(inst, &a, &sub.x)));
                            }
                        }
                        SubStatus::Infeasible if sub.cut.as_ref().is_some_and(|c| master.add_feasibility_cut(c)) => {}
                        _ => master.add_no_good(&a),
                    }
                }
            }
        }
        let upper = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        lower = lower.min(upper);
        uppers.push(upper);
        lowers.push(lower);
        if upper - lower < cfg.epsilon || repeated {
            converged = true;
            break;
        }
    }
    let Some((_, schedule)) = best else {
        return Err(SpsError::MasterInfeasible(format!(
            "no feasible assignment found in {iterations} iterations"
        )));
    };
    if !converged {
        notes.push(format!("outer iteration cap {} reached", cfg.max_outer_iter));
    }
    if fallbacks > 0 {
        notes.push(format!("{fallbacks} assignments priced by the coupled subproblem after a failed pass"));
    }
    let mut rep = report(inst, Algorithm::Lnbd, &schedule, started);
    rep.converged = converged;
    rep.iterations = iterations;
    rep.upper_bounds = uppers;
    rep.lower_bounds = lowers;
    rep.kkt_max = kkt_max;
    rep.repairs = repairs;
    rep.notes = notes;
    Ok((schedule, rep))
}
