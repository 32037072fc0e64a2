//! Continuous subproblem with all binaries fixed.
//!
//! Sensitivities reported in `lambda_*` are derivatives of the optimal
//! continuous cost with respect to each fixed binary, i.e. the negated
//! multipliers of the fixing rows.

use serde::Serialize;

use super::ipm::{self, IpmOptions, IpmStatus};
use super::program::{ConvexProgram, Row, RowKind, Tag};
use crate::problem::{Assignment, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// Scaled KKT residual norms (see [`kkt_residual`]).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

/// Linear sensitivities over the binaries of an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sensitivities {
    pub delta: Vec<Vec<f64>>,
    pub s_p: Vec<Vec<f64>>,
    pub s_s: Vec<Vec<f64>>,
}

impl Sensitivities {
    /// `Σ λ·(x - x̂)` for assignments over the same window.
    pub fn linear_term(&self, x: &Assignment, at: &Assignment) -> f64 {
        let mut v = 0.0;
        for (g, row) in self.delta.iter().enumerate() {
            for (k, l) in row.iter().enumerate() {
                v += l * (f64::from(x.delta[g][k]) - f64::from(at.delta[g][k]));
            }
        }
        for (c, row) in self.s_p.iter().enumerate() {
            for (k, l) in row.iter().enumerate() {
                let d = f64::from(x.s_p[c][k]) - f64::from(at.s_p[c][k]);
                // S_S moves opposite to S_P.
                v += (l - self.s_s[c][k]) * d;
            }
        }
        v
    }
}

/// Valid inequality `value + Σ λ·(x - x̂) <= 0` violated by `at`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityCut {
    pub value: f64,
    pub lambda: Sensitivities,
    pub at: Assignment,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubproblemSolution {
    pub status: SubStatus,
    pub x: Vec<f64>,
    pub mult: Vec<f64>,
    /// Continuous cost, commitment terms excluded.
    pub objective: f64,
    pub lambda: Sensitivities,
    pub kkt: KktResiduals,
    pub iterations: usize,
    pub cut: Option<FeasibilityCut>,
    pub message: String,
}

/// Phase-1 optimum below this counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Residual bound an `Optimal` solution must meet.
pub const KKT_TOL: f64 = 1e-6;

fn sensitivities(inst: &ProblemInstance, mult: &[f64]) -> Sensitivities {
    let grab = |rows: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().map(|&i| -mult[i]).collect())
            .collect()
    };
    Sensitivities {
        delta: grab(&inst.fix_delta),
        s_p: grab(&inst.fix_sp),
        s_s: grab(&inst.fix_ss),
    }
}

pub fn solve_subproblem(inst: &ProblemInstance, a: &Assignment) -> SubproblemSolution {
    solve_with(inst, a, IpmOptions::default())
}

pub fn solve_with(inst: &ProblemInstance, a: &Assignment, opts: IpmOptions) -> SubproblemSolution {
    let prog = inst.program_with(a);
    let mut res = ipm::solve(&prog, opts);
    if res.status == IpmStatus::Converged && kkt_residual(&prog, &res.x, &res.mult).max() > KKT_TOL {
        // Converged to the gap tolerance but not to the KKT gate: tighten once.
        let tight = IpmOptions {
            tol: opts.tol * 1e-3,
            max_iter: opts.max_iter * 2,
        };
        let retry = ipm::solve(&prog, tight);
        if retry.status == IpmStatus::Converged {
            res = retry;
        }
    }
    if res.status == IpmStatus::Converged {
        let kkt = kkt_residual(&prog, &res.x, &res.mult);
        if kkt.max() <= KKT_TOL {
            return SubproblemSolution {
                status: SubStatus::Optimal,
                lambda: sensitivities(inst, &res.mult),
                objective: res.objective,
                x: res.x,
                mult: res.mult,
                kkt,
                iterations: res.iterations,
                cut: None,
                message: String::new(),
            };
        }
    }

    let (eprog, n_slack) = elastic(&prog);
    let er = ipm::solve(&eprog, opts);
    let slack_sum: f64 = er.x[prog.n()..prog.n() + n_slack].iter().sum();
    let fallback = |status, message: String, cut| SubproblemSolution {
        status,
        x: res.x.clone(),
        mult: res.mult.clone(),
        objective: res.objective,
        lambda: sensitivities(inst, &res.mult),
        kkt: kkt_residual(&prog, &res.x, &res.mult),
        iterations: res.iterations + er.iterations,
        cut,
        message,
    };
    if er.status != IpmStatus::Converged {
        return fallback(
            SubStatus::NumericalFailure,
            format!("main solve {:?}, phase-1 {:?}", res.status, er.status),
            None,
        );
    }
    if slack_sum > FEASIBILITY_TOL {
        let mult: Vec<f64> = er.mult[..prog.rows.len()].to_vec();
        let cut = FeasibilityCut {
            // Proximal term bound keeps the cut valid at feasible points.
            value: slack_sum - PROX_ALLOWANCE,
            lambda: sensitivities(inst, &mult),
            at: a.clone(),
        };
        return fallback(
            SubStatus::Infeasible,
            format!("minimum total violation {slack_sum:.3e}"),
            Some(cut),
        );
    }
    fallback(
        SubStatus::NumericalFailure,
        format!(
            "phase-1 reached violation {slack_sum:.3e} but main solve ended {:?} ({:?})",
            res.status,
            kkt_residual(&prog, &res.x, &res.mult)
        ),
        None,
    )
}

const PROX_WEIGHT: f64 = 1e-9;
const PROX_ALLOWANCE: f64 = 1e-4;

/// Feasibility program: every row except fixings and simple boxes gets
/// non-negative slacks whose sum is minimised. Slack variables follow the
/// original ones; returns the program and the slack count.
pub fn elastic(p: &ConvexProgram) -> (ConvexProgram, usize) {
    let mut e = ConvexProgram::new();
    for name in &p.names {
        let j = e.add_var(name.clone());
        e.obj_quad[j] = PROX_WEIGHT;
    }
    let mut rows = vec![];
    let mut slack_rows = vec![];
    for row in &p.rows {
        let mut r = row.clone();
        if !(row.tag == Tag::Fix || row.tag.is_box()) {
            let sp = e.add_var(format!("slack+{}", row.tag.label()));
            r.lin.push((sp, -1.0));
            slack_rows.push(sp);
            if row.kind == RowKind::Eq {
                let sn = e.add_var(format!("slack-{}", row.tag.label()));
                r.lin.push((sn, 1.0));
                slack_rows.push(sn);
            }
        }
        rows.push(r);
    }
    let n_slack = slack_rows.len();
    for &j in &slack_rows {
        e.obj_quad[j] = 0.0;
        e.obj_lin[j] = 1.0;
        rows.push(Row::le(Tag::Elastic, vec![(j, -1.0)], 0.0));
    }
    e.rows = rows;
    (e, n_slack)
}

/// Scaled KKT residuals recomputed from scratch for a point and multipliers:
/// stationarity relative to the objective gradient, primal violation relative
/// to the largest right-hand side, dual sign violations, and complementarity
/// relative to the objective value.
pub fn kkt_residual(p: &ConvexProgram, x: &[f64], mult: &[f64]) -> KktResiduals {
    let grad = p.objective_grad(x);
    let mut lag = grad.clone();
    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut comp: f64 = 0.0;
    for (r, row) in p.rows.iter().enumerate() {
        for (j, v) in row.gradient(x) {
            lag[j] += mult[r] * v;
        }
        let g = row.value(x);
        match row.kind {
            RowKind::Eq => primal = primal.max(g.abs()),
            RowKind::Le => {
                primal = primal.max(g.max(0.0));
                dual = dual.max((-mult[r]).max(0.0));
                comp = comp.max((mult[r] * g).abs());
            }
        }
    }
    let rhs_scale = 1.0 + p.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
    let grad_scale = 1.0 + grad.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    KktResiduals {
        stationarity: lag.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / grad_scale,
        primal: primal / rhs_scale,
        dual,
        complementarity: comp / (1.0 + p.objective(x).abs()),
    }
}

/// Residuals of a solution against its instance and assignment.
pub fn instance_kkt(inst: &ProblemInstance, a: &Assignment, sol: &SubproblemSolution) -> KktResiduals {
    kkt_residual(&inst.program_with(a), &sol.x, &sol.mult)
}
