//! Master problem over the free binaries.
//!
//! Minimises the commitment cost `Σ c·δ·Δt` plus the surrogate `μ` for the
//! continuous cost, subject to start-up/minimum-on logic, switch minimum
//! time, capacity-coverage rows per island part and interval, and the
//! accumulated optimality and feasibility cuts. Start-up indicators are
//! implied by consecutive commitments, so they never appear as variables.

use std::num::NonZeroU32;

use highs::{HighsModelStatus, RowProblem, Sense};
use serde::Serialize;

use crate::convex::subproblem::{FeasibilityCut, Sensitivities};
use crate::error::{Result, SpsError};
use crate::fault::SwitchRole;
use crate::par::{self, Execution};
use crate::problem::{part_loads, Assignment, ProblemInstance};

/// Exhaustive search is used up to this many free binaries.
pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinaryVar {
    Delta { g: usize, k: usize },
    SwitchP { c: usize, k: usize },
}

/// `Σ coef·x <= rhs` over the free binaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinRow {
    pub coef: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinRow {
    fn lhs(&self, x: &[u8]) -> f64 {
        self.coef.iter().map(|&(i, c)| c * f64::from(x[i])).sum()
    }

    fn holds(&self, x: &[u8]) -> bool {
        self.lhs(x) <= self.rhs + 1e-6 * (1.0 + self.rhs.abs())
    }
}

/// `μ >= constant + Σ coef·x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityCut {
    pub constant: f64,
    pub coef: Vec<(usize, f64)>,
}

impl OptimalityCut {
    fn value(&self, x: &[u8]) -> f64 {
        self.constant + self.coef.iter().map(|&(i, c)| c * f64::from(x[i])).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MasterMethod {
    /// Exhaustive search when small enough, branch-and-bound otherwise.
    Auto,
    Exhaustive,
    BranchAndBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterSolution {
    pub assignment: Assignment,
    pub x: Vec<u8>,
    /// Commitment cost plus `μ`: a lower bound on the full objective.
    pub objective: f64,
    pub commitment: f64,
    pub mu: f64,
    /// Branch-and-bound nodes, or assignments scanned.
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Master {
    pub vars: Vec<BinaryVar>,
    pub cost: Vec<f64>,
    /// Template holding the values of binaries that are not free.
    base: Assignment,
    /// Start-up, minimum on-time and switch minimum-time rows.
    pub logic: Vec<LinRow>,
    /// Capacity-coverage rows per part and interval.
    pub coverage: Vec<LinRow>,
    pub optimality: Vec<OptimalityCut>,
    pub feasibility: Vec<LinRow>,
    pub mu_lower: f64,
}

impl Master {
    pub fn new(inst: &ProblemInstance) -> Result<Master> {
        Master::with_history(inst, &Master::no_history(inst))
    }

    /// Master for a window starting after `history`, which holds the
    /// decided columns `0..window.start`.
    pub fn with_history(inst: &ProblemInstance, history: &Assignment) -> Result<Master> {
        Master::assemble(inst, history, true)
    }

    /// Master with integer logic only, for enumeration.
    pub fn without_coverage(inst: &ProblemInstance) -> Result<Master> {
        let mut m = Master::assemble(inst, &Master::no_history(inst), false)?;
        m.coverage.clear();
        Ok(m)
    }

    pub fn no_history(inst: &ProblemInstance) -> Assignment {
        Assignment {
            delta: vec![vec![]; inst.scenario.generators.len()],
            s_p: vec![vec![]; inst.partition.coupled_zones.len()],
        }
    }

    fn assemble(inst: &ProblemInstance, history: &Assignment, coverage_checked: bool) -> Result<Master> {
        let s = &inst.scenario;
        let part = &inst.partition;
        let k_len = inst.len();
        let t0 = inst.window.start;
        let dt = s.dt();
        let mut vars = vec![];
        let mut cost = vec![];
        let mut index_delta = vec![vec![None; k_len]; s.generators.len()];
        for (g, spec) in s.generators.iter().enumerate() {
            if part.is_failed(g) {
                continue;
            }
            for k in 0..k_len {
                index_delta[g][k] = Some(vars.len());
                vars.push(BinaryVar::Delta { g, k });
                cost.push(spec.cost_c * dt);
            }
        }
        let mut index_sp = vec![vec![0; k_len]; part.coupled_zones.len()];
        for (c, row) in index_sp.iter_mut().enumerate() {
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = vars.len();
                vars.push(BinaryVar::SwitchP { c, k });
                cost.push(0.0);
            }
        }
        let base = Assignment {
            delta: vec![vec![0; k_len]; s.generators.len()],
            s_p: vec![vec![0; k_len]; part.coupled_zones.len()],
        };

        let mut logic = vec![];
        let t_end = t0 + k_len;
        // `δ(t) - δ(t-1) - δ(τ) <= 0`: a start at t keeps the unit on for the
        // window clipped to the horizon. Earlier columns come from `history`.
        let mut min_time = |index: &[Option<usize>], known: &dyn Fn(isize) -> f64, span: usize| {
            if span <= 1 {
                return;
            }
            let term = |t: isize| match t >= t0 as isize {
                true => Err(index[t as usize - t0].unwrap()),
                false => Ok(known(t)),
            };
            for t in t0.saturating_sub(span - 1)..t_end {
                for tau in (t + 1).max(t0)..(t + span).min(t_end) {
                    let mut row = LinRow { coef: vec![], rhs: 0.0 };
                    for (when, sign) in [(t as isize, 1.0), (t as isize - 1, -1.0), (tau as isize, -1.0)] {
                        match term(when) {
                            Err(i) => row.coef.push((i, sign)),
                            Ok(v) => row.rhs -= sign * v,
                        }
                    }
                    logic.push(row);
                }
            }
        };
        for (g, spec) in s.generators.iter().enumerate() {
            if part.is_failed(g) {
                continue;
            }
            let known = |t: isize| match t {
                -1 => f64::from(u8::from(spec.initial_on)),
                _ => f64::from(history.delta[g][t as usize]),
            };
            min_time(&index_delta[g], &known, spec.t_min_on);
        }
        // Switch minimum time, on closing the PB side.
        for (c, &z) in part.coupled_zones.iter().enumerate() {
            let index: Vec<Option<usize>> = index_sp[c].iter().map(|&i| Some(i)).collect();
            let known = |t: isize| match t {
                -1 => f64::from(s.topology.switch_initial[z].pb.min(1)),
                _ => f64::from(history.s_p[c][t as usize]),
            };
            min_time(&index, &known, s.topology.t_min_switch);
        }
        // Capacity coverage per part and interval. Coupled-zone loads enter
        // through S_P, with S_S = 1 - S_P.
        let mut coverage = vec![];
        let loads = part_loads(s, part);
        let zeta = s.topology.converter_efficiency;
        let prop = &s.propulsion;
        for (w, p) in part.parts.iter().enumerate() {
            let e_max: f64 = p.esms.iter().map(|&n| s.esms[n].p_max).sum();
            let e_min: f64 = p.esms.iter().map(|&n| s.esms[n].p_min).sum();
            let (pr_min, pr_max) = if p.propulsion { (prop.p_min(), prop.p_max()) } else { (0.0, 0.0) };
            for k in 0..k_len {
                let t = t0 + k;
                let mut upper = LinRow {
                    coef: vec![],
                    rhs: e_max - loads.vs[w][t] - pr_min,
                };
                let mut lower = LinRow {
                    coef: vec![],
                    rhs: loads.vs[w][t] + loads.nonvital[w][t] + pr_max - e_min,
                };
                for &g in &p.generators {
                    if let Some(i) = index_delta[g][k] {
                        upper.coef.push((i, -zeta * s.generators[g].p_max));
                        lower.coef.push((i, zeta * s.generators[g].p_min));
                    }
                }
                for (c, &z) in part.coupled_zones.iter().enumerate() {
                    let load = s.loads.vs_by_zone[z][t];
                    let SwitchRole::Coupled { .. } = part.switch_roles[z] else {
                        continue;
                    };
                    if p.omega_pb.contains(&z) {
                        upper.coef.push((index_sp[c][k], load));
                        lower.coef.push((index_sp[c][k], -load));
                    }
                    if p.omega_sb.contains(&z) {
                        upper.coef.push((index_sp[c][k], -load));
                        upper.rhs -= load;
                        lower.coef.push((index_sp[c][k], load));
                        lower.rhs += load;
                    }
                }
                for row in [upper, lower] {
                    if row.coef.is_empty() {
                        if coverage_checked && row.rhs < -1e-9 {
                            return Err(SpsError::MasterInfeasible(format!(
                                "part {w} cannot cover its demand at t={t} with any commitment"
                            )));
                        }
                    } else {
                        coverage.push(row);
                    }
                }
            }
        }
        Ok(Master {
            vars,
            cost,
            base,
            logic,
            coverage,
            optimality: vec![],
            feasibility: vec![],
            mu_lower: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn to_assignment(&self, x: &[u8]) -> Assignment {
        let mut a = self.base.clone();
        for (i, v) in self.vars.iter().enumerate() {
            match *v {
                BinaryVar::Delta { g, k } => a.delta[g][k] = x[i],
                BinaryVar::SwitchP { c, k } => a.s_p[c][k] = x[i],
            }
        }
        a
    }

    pub fn from_assignment(&self, a: &Assignment) -> Vec<u8> {
        self.vars
            .iter()
            .map(|v| match *v {
                BinaryVar::Delta { g, k } => a.delta[g][k],
                BinaryVar::SwitchP { c, k } => a.s_p[c][k],
            })
            .collect()
    }

    /// Coefficients of `λ·(x - x̂)` over the free binaries.
    fn linearise(&self, lambda: &Sensitivities) -> Vec<(usize, f64)> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let c = match *v {
                    BinaryVar::Delta { g, k } => lambda.delta[g][k],
                    BinaryVar::SwitchP { c, k } => lambda.s_p[c][k] - lambda.s_s[c][k],
                };
                (i, c)
            })
            .filter(|e| e.1 != 0.0)
            .collect()
    }

    fn shift(coef: &[(usize, f64)], at: &[u8]) -> f64 {
        coef.iter().map(|&(i, c)| c * f64::from(at[i])).sum()
    }

    /// `μ >= value + λ·(x - x̂)`.
    pub fn add_optimality_cut(&mut self, value: f64, lambda: &Sensitivities, at: &Assignment) {
        let coef = self.linearise(lambda);
        let x_hat = self.from_assignment(at);
        let constant = value - Self::shift(&coef, &x_hat);
        self.optimality.push(OptimalityCut { constant, coef });
    }

    /// Adds the cut, or a no-good row when the certificate is too weak to
    /// exclude its own assignment. Returns true when the certificate was used.
    pub fn add_feasibility_cut(&mut self, cut: &FeasibilityCut) -> bool {
        let coef = self.linearise(&cut.lambda);
        let x_hat = self.from_assignment(&cut.at);
        if cut.value <= 1e-9 {
            self.add_no_good(&cut.at);
            return false;
        }
        let rhs = Self::shift(&coef, &x_hat) - cut.value;
        self.feasibility.push(LinRow { coef, rhs });
        true
    }

    /// Excludes exactly one assignment.
    pub fn add_no_good(&mut self, at: &Assignment) {
        let x_hat = self.from_assignment(at);
        let ones = x_hat.iter().filter(|&&v| v == 1).count() as f64;
        let coef = x_hat
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, if v == 1 { 1.0 } else { -1.0 }))
            .collect();
        self.feasibility.push(LinRow { coef, rhs: ones - 1.0 });
    }

    pub fn feasible(&self, x: &[u8]) -> bool {
        self.logic.iter().chain(&self.coverage).chain(&self.feasibility).all(|r| r.holds(x))
    }

    pub fn logic_feasible(&self, x: &[u8]) -> bool {
        self.logic.iter().all(|r| r.holds(x))
    }

    /// Assignment for enumeration code `code`, most significant bit first.
    pub fn decode(&self, code: u64) -> Vec<u8> {
        let n = self.len();
        (0..n).map(|i| ((code >> (n - 1 - i)) & 1) as u8).collect()
    }

    /// `μ` implied by the cuts at `x`.
    pub fn mu(&self, x: &[u8]) -> f64 {
        self.optimality
            .iter()
            .map(|c| c.value(x))
            .fold(self.mu_lower, f64::max)
    }

    pub fn commitment(&self, x: &[u8]) -> f64 {
        self.cost.iter().zip(x).map(|(c, &v)| c * f64::from(v)).sum()
    }

    pub fn objective(&self, x: &[u8]) -> f64 {
        self.commitment(x) + self.mu(x)
    }

    fn solution(&self, x: Vec<u8>, nodes: usize) -> MasterSolution {
        MasterSolution {
            assignment: self.to_assignment(&x),
            objective: self.objective(&x),
            commitment: self.commitment(&x),
            mu: self.mu(&x),
            x,
            nodes,
        }
    }

    pub fn solve(&self, exec: Execution) -> Result<MasterSolution> {
        self.solve_with(MasterMethod::Auto, exec)
    }

    pub fn solve_with(&self, method: MasterMethod, exec: Execution) -> Result<MasterSolution> {
        let exhaustive = match method {
            MasterMethod::Auto => self.len() <= EXHAUSTIVE_LIMIT,
            MasterMethod::Exhaustive => true,
            MasterMethod::BranchAndBound => false,
        };
        if exhaustive {
            if self.len() > 24 {
                return Err(SpsError::TooLarge {
                    binaries: self.len(),
                    limit: 24,
                });
            }
            self.exhaustive(exec)
        } else {
            self.branch_and_bound(exec)
        }
    }

    /// Scans every assignment; ties go to the lexicographically smallest.
    fn exhaustive(&self, exec: Execution) -> Result<MasterSolution> {
        let total: u64 = 1 << self.len();
        let chunks = 64.min(total) as usize;
        let per = total.div_ceil(chunks as u64);
        let best = par::map_range(exec, chunks, |c| {
            let mut best: Option<(f64, u64)> = None;
            for code in (c as u64 * per)..((c as u64 + 1) * per).min(total) {
                let x = self.decode(code);
                if !self.feasible(&x) {
                    continue;
                }
                let v = self.objective(&x);
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, code));
                }
            }
            best
        });
        let best = best
            .into_iter()
            .flatten()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match best {
            Some((_, code)) => Ok(self.solution(self.decode(code), total as usize)),
            None => Err(SpsError::MasterInfeasible("no assignment satisfies the logic rows and cuts".into())),
        }
    }

    /// Branch-and-cut through HiGHS with a near-zero gap.
    fn branch_and_bound(&self, exec: Execution) -> Result<MasterSolution> {
        let mut lp = RowProblem::default();
        let xs: Vec<_> = self.cost.iter().map(|&c| lp.add_integer_column(c, 0..=1)).collect();
        let mu = lp.add_column(1.0, self.mu_lower..);
        let terms = |coef: &[(usize, f64)]| coef.iter().map(|&(i, c)| (xs[i], c)).collect::<Vec<_>>();
        for r in self.logic.iter().chain(&self.coverage).chain(&self.feasibility) {
            lp.add_row(..=r.rhs, terms(&r.coef));
        }
        for cut in &self.optimality {
            let mut row = terms(&cut.coef);
            row.push((mu, -1.0));
            lp.add_row(..=-cut.constant, row);
        }
        let mut model = lp.optimise(Sense::Minimise);
        model.make_quiet();
        model.set_option("mip_rel_gap", 1e-9);
        model.set_option("mip_abs_gap", 1e-9);
        model.set_option("random_seed", 0);
        if !exec.is_parallel() {
            model.set_threads(NonZeroU32::MIN);
        }
        let solved = model.solve();
        let status = solved.status();
        match status {
            HighsModelStatus::Optimal => {}
            HighsModelStatus::Infeasible => {
                return Err(SpsError::MasterInfeasible("no assignment satisfies the logic rows and cuts".into()))
            }
            other => return Err(SpsError::Numerical(format!("master MILP stopped with {other:?}"))),
        }
        let x: Vec<u8> = solved.get_solution().columns()[..self.len()]
            .iter()
            .map(|&v| u8::from(v >= 0.5))
            .collect();
        if !self.feasible(&x) {
            return Err(SpsError::Numerical("master MILP returned a point violating its rows".into()));
        }
        let nodes = solved.int_info_value(c"mip_node_count").unwrap_or(0).max(0) as usize;
        Ok(self.solution(x, nodes))
    }
}
