//! Benders decomposition: the master proposes binaries, the convex
//! subproblem prices them and returns a cut.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::convex::subproblem::{solve_subproblem, SubStatus, SubproblemSolution};
use crate::error::{Result, SpsError};
use crate::master::Master;
use crate::par::Execution;
use crate::problem::{Assignment, ProblemInstance};
use crate::schedule::{Algorithm, Schedule, SolveReport};
use crate::verify;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BendersConfig {
    /// Stop when the bound gap drops below this, in monetary units.
    pub epsilon: f64,
    pub max_iter: usize,
    pub exec: Execution,
    pub mu_lower: f64,
}

impl Default for BendersConfig {
    fn default() -> Self {
        BendersConfig {
            epsilon: 1e-2,
            max_iter: 500,
            exec: Execution::default(),
            mu_lower: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub assignment: Assignment,
    pub sub: SubproblemSolution,
    /// Commitment cost plus subproblem cost of the incumbent.
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
    pub upper_bounds: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    /// Largest KKT residual over all optimal subproblems.
    pub kkt_max: f64,
    pub notes: Vec<String>,
}

enum Seen {
    Priced,
    Rejected,
}

/// Runs the cut loop on one instance; `history` fixes binaries before the
/// instance window (empty columns for a full-horizon instance).
pub fn decompose(inst: &ProblemInstance, history: &Assignment, cfg: &BendersConfig) -> Result<Outcome> {
    let mut master = Master::with_history(inst, history)?;
    master.mu_lower = cfg.mu_lower;
    let mut best: Option<(f64, Assignment, SubproblemSolution)> = None;
    let mut lower = f64::NEG_INFINITY;
    let (mut uppers, mut lowers) = (vec![], vec![]);
    let mut notes = vec![];
    let mut kkt_max: f64 = 0.0;
    let mut seen: HashMap<Vec<u8>, Seen> = HashMap::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let proposal = match master.solve(cfg.exec) {
            Ok(p) => p,
            // Every assignment is cut off: the incumbent, if any, is optimal.
            Err(SpsError::MasterInfeasible(msg)) => {
                if best.is_none() {
                    return Err(SpsError::MasterInfeasible(msg));
                }
                lower = best.as_ref().unwrap().0;
                uppers.push(lower);
                lowers.push(lower);
                converged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        lower = lower.max(proposal.objective);
        let a = proposal.assignment;
        let mut repeated = false;
        match seen.get(&proposal.x) {
            Some(Seen::Priced) => repeated = true,
            Some(Seen::Rejected) => {
                master.add_no_good(&a);
                notes.push(format!("iteration {iterations}: rejected assignment proposed again, excluded"));
            }
            None => {
                let sub = solve_subproblem(inst, &a);
                match sub.status {
                    SubStatus::Optimal => {
                        kkt_max = kkt_max.max(sub.kkt.max());
                        let value = inst.commitment_cost(&a) + sub.objective;
                        master.add_optimality_cut(sub.objective, &sub.lambda, &a);
                        seen.insert(proposal.x.clone(), Seen::Priced);
                        if best.as_ref().is_none_or(|b| value < b.0) {
                            best = Some((value, a, sub));
                        }
                    }
                    SubStatus::Infeasible => {
                        let used = sub.cut.as_ref().is_some_and(|cut| master.add_feasibility_cut(cut));
                        if !used {
                            master.add_no_good(&a);
                            notes.push(format!("iteration {iterations}: weak feasibility certificate, no-good added"));
                        }
                        seen.insert(proposal.x.clone(), Seen::Rejected);
                    }
                    SubStatus::NumericalFailure => {
                        master.add_no_good(&a);
                        notes.push(format!("iteration {iterations}: subproblem failed ({}), no-good added", sub.message));
                        seen.insert(proposal.x.clone(), Seen::Rejected);
                    }
                }
            }
        }
        let upper = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        // Floating-point noise must not let the lower bound pass the upper.
        lower = lower.min(upper);
        uppers.push(upper);
        lowers.push(lower);
        if upper - lower < cfg.epsilon {
            converged = true;
            break;
        }
        if repeated {
            notes.push(format!(
                "iteration {iterations}: master repeated a priced assignment with gap {:.3e}; stopping",
                upper - lower
            ));
            converged = true;
            break;
        }
    }
    let Some((upper, assignment, sub)) = best else {
        return Err(SpsError::MasterInfeasible(format!(
            "no feasible assignment found in {iterations} iterations"
        )));
    };
    if !converged {
        notes.push(format!("iteration cap {} reached, gap {:.3e}", cfg.max_iter, upper - lower));
    }
    Ok(Outcome {
        assignment,
        sub,
        upper,
        lower,
        iterations,
        converged,
        upper_bounds: uppers,
        lower_bounds: lowers,
        kkt_max,
        notes,
    })
}

/// Full-horizon schedule from an assignment and its subproblem point.
pub fn assemble(inst: &ProblemInstance, a: &Assignment, x: &[f64]) -> Schedule {
    let mut out = Schedule::zeros(&inst.scenario, inst.partition.parts.len());
    inst.extract(a, x, &mut out);
    let v = &inst.vars;
    out.d_d = x[v.d_d].max(0.0);
    out.fill_startups(&inst.scenario);
    out
}

pub fn report(
    inst: &ProblemInstance,
    algorithm: Algorithm,
    schedule: &Schedule,
    started: Instant,
) -> SolveReport {
    let s = &inst.scenario;
    let part = &inst.partition;
    let initial = &s.topology.switch_initial;
    SolveReport {
        algorithm,
        converged: true,
        cost: verify::cost_breakdown(s, part, schedule, &inst.penalties),
        p_ls_total: verify::shed_energy(s, part, schedule),
        d_d: schedule.d_d,
        n_rs: crate::fault::count_switch_changes(schedule, initial),
        iterations: 0,
        upper_bounds: vec![],
        lower_bounds: vec![],
        kkt_max: 0.0,
        wall_time_s: started.elapsed().as_secs_f64(),
        repairs: 0,
        notes: vec![],
    }
}

/// Solves a full-horizon instance to within `epsilon` of the optimum.
pub fn run(inst: &ProblemInstance, cfg: &BendersConfig) -> Result<(Schedule, SolveReport)> {
    let started = Instant::now();
    let out = decompose(inst, &Master::no_history(inst), cfg)?;
    let schedule = assemble(inst, &out.assignment, &out.sub.x);
    let mut rep = report(inst, Algorithm::Benders, &schedule, started);
    rep.converged = out.converged;
    rep.iterations = out.iterations;
    rep.upper_bounds = out.upper_bounds;
    rep.lower_bounds = out.lower_bounds;
    rep.kkt_max = out.kkt_max;
    rep.notes = out.notes;
    rep.wall_time_s = started.elapsed().as_secs_f64();
    Ok((schedule, rep))
}
