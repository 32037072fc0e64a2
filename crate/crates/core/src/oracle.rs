//! Brute-force reference solver: enumerate every logic-feasible assignment
//! and price each one with the convex subproblem.

use serde::Serialize;

use crate::benders::assemble;
use crate::convex::ipm::{self, IpmOptions, IpmStatus};
use crate::convex::program::{Row, Tag};
use crate::convex::subproblem::{solve_subproblem, SubStatus};
use crate::error::{Result, SpsError};
use crate::fault::IslandPartition;
use crate::master::Master;
use crate::model::ShipScenario;
use crate::par::{self, Execution};
use crate::problem::{build, Assignment, ProblemInstance};
use crate::schedule::Schedule;

pub const DEFAULT_LIMIT: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct OracleSolution {
    pub schedule: Schedule,
    pub assignment: Assignment,
    /// Commitment cost plus subproblem cost.
    pub objective: f64,
    /// Assignments passing the logic filter.
    pub evaluated: usize,
    pub kkt_max: f64,
}

fn logic_feasible_codes(inst: &ProblemInstance, limit: usize) -> Result<(Master, Vec<u64>)> {
    let nb = inst.free_binaries();
    if nb > limit {
        return Err(SpsError::TooLarge { binaries: nb, limit });
    }
    let master = Master::new(inst).or_else(|e| match e {
        // Coverage rows can fail up front; the oracle does not rely on them.
        SpsError::MasterInfeasible(_) => Master::without_coverage(inst),
        e => Err(e),
    })?;
    let codes = (0..1u64 << nb).filter(|&c| master.logic_feasible(&master.decode(c))).collect();
    Ok((master, codes))
}

pub fn enumerate_solve(inst: &ProblemInstance, limit: usize, exec: Execution) -> Result<OracleSolution> {
    let (master, codes) = logic_feasible_codes(inst, limit)?;
    let priced = par::map(exec, &codes, |&code| {
        let a = master.to_assignment(&master.decode(code));
        let sub = solve_subproblem(inst, &a);
        (sub.status == SubStatus::Optimal).then(|| (inst.commitment_cost(&a) + sub.objective, code, a, sub))
    });
    let kkt_max = priced.iter().flatten().map(|p| p.3.kkt.max()).fold(0.0, f64::max);
    let best = priced
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let Some((objective, _, assignment, sub)) = best else {
        return Err(SpsError::MasterInfeasible("no assignment admits a continuous point".into()));
    };
    Ok(OracleSolution {
        schedule: assemble(inst, &assignment, &sub.x),
        assignment,
        objective,
        evaluated: codes.len(),
        kkt_max,
    })
}

/// Longest distance sailable under `a` without any shortfall, or `None`
/// when the assignment admits no continuous point at all.
pub fn max_reach(inst: &ProblemInstance, a: &Assignment) -> Option<f64> {
    let mut p = inst.program_with(a);
    let v = &inst.vars;
    p.obj_const = 0.0;
    p.obj_lin.iter_mut().for_each(|c| *c = 0.0);
    p.obj_quad.iter_mut().for_each(|c| *c = 0.0);
    let dt = inst.scenario.dt();
    for &u in &v.speed {
        p.obj_lin[u] = -dt;
    }
    for r in p.rows.iter_mut().filter(|r| r.tag == Tag::Distance) {
        r.rhs = 0.0;
    }
    p.add_row(Row::le(Tag::SlackNonneg, vec![(v.d_d, 1.0)], 0.0));
    let res = ipm::solve(&p, IpmOptions::default());
    match res.status {
        IpmStatus::Converged => Some(v.speed.iter().map(|&u| res.x[u] * dt).sum()),
        _ => None,
    }
}

/// Largest distance any logic-feasible assignment can cover, per assignment.
fn reaches(s: &ShipScenario, part: &IslandPartition, limit: usize, exec: Execution) -> Result<Vec<f64>> {
    let inst = build(s, part)?;
    let (master, codes) = logic_feasible_codes(&inst, limit)?;
    Ok(par::map(exec, &codes, |&code| {
        max_reach(&inst, &master.to_assignment(&master.decode(code))).unwrap_or(f64::NEG_INFINITY)
    }))
}

fn covers(reach: f64, d: f64) -> bool {
    reach >= d - 1e-7 * d.max(1.0)
}

/// True when some assignment meets the scenario's distance with no
/// shortfall.
pub fn certify_p3_feasible(s: &ShipScenario, part: &IslandPartition, limit: usize, exec: Execution) -> Result<bool> {
    let d = s.voyage.distance;
    Ok(reaches(s, part, limit, exec)?.into_iter().any(|r| covers(r, d)))
}

/// Bisection for the largest feasible distance on `[0, T·Δt·V_max]`.
///
/// Feasibility is monotone in the target, so each assignment's reach is
/// computed once and the bisection queries those values.
pub fn max_distance_bisection(s: &ShipScenario, part: &IslandPartition, tol: f64, limit: usize, exec: Execution) -> Result<f64> {
    let all = reaches(s, part, limit, exec)?;
    let feasible = |d: f64| all.iter().any(|&r| covers(r, d));
    let (mut lo, mut hi) = (0.0, s.horizon() as f64 * s.dt() * s.propulsion.v_max);
    if !feasible(lo) {
        return Ok(0.0);
    }
    if feasible(hi) {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
