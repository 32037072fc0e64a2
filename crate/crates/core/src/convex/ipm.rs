//! Interior-point solution of [`ConvexProgram`]s via the Clarabel conic
//! solver.
//!
//! Variables pinned by singleton equalities, or by collapsing bounds, are
//! removed first and their rows' multipliers recovered afterwards from
//! stationarity; this keeps the duals of fixing rows at their vertex values.
//! Curved rows become cones: `α·u^β <= L(x)` a power cone and
//! `Σ c_j x_j² <= L(x)` a rotated second-order cone. Their multipliers are
//! read back from the cone duals.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PowerConeT,
    SecondOrderConeT, SolverStatus, SupportedConeT, ZeroConeT,
};

use super::program::{ConvexProgram, Power, Row, RowKind};

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Converged,
    Infeasible,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub status: IpmStatus,
    pub x: Vec<f64>,
    /// One multiplier per program row: free sign for equalities, `>= 0` for
    /// inequalities, with the Lagrangian `f + Σ mult_r g_r`.
    pub mult: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
}

enum Pin {
    Eq(usize),
    Box { hi: usize, lo: usize },
}

struct Presolve {
    fixed: Vec<Option<f64>>,
    /// Fixed variables in the order they were pinned, with the pinning rows.
    order: Vec<(usize, Pin)>,
    infeasible: bool,
}

/// Fixes variables pinned by singleton equalities or by collapsing bounds,
/// repeating until nothing changes. Curved rows are left alone.
fn presolve(p: &ConvexProgram) -> Presolve {
    let n = p.n();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut order = vec![];
    let mut infeasible = false;
    loop {
        let mut changed = false;
        let mut lo = vec![(f64::NEG_INFINITY, usize::MAX); n];
        let mut hi = vec![(f64::INFINITY, usize::MAX); n];
        for (r, row) in p.rows.iter().enumerate() {
            if !row.is_linear() {
                continue;
            }
            let mut constant = -row.rhs;
            let mut free: Option<(usize, f64)> = None;
            let mut n_free = 0;
            for &(j, c) in &row.lin {
                match (fixed[j], &mut free) {
                    (Some(v), _) => constant += c * v,
                    (None, Some((k, a))) if *k == j => *a += c,
                    (None, _) => {
                        free = Some((j, c));
                        n_free += 1;
                    }
                }
            }
            let slack = 1e-9 * (1.0 + row.rhs.abs());
            match (n_free, free) {
                (0, _) => {
                    infeasible |= match row.kind {
                        RowKind::Eq => constant.abs() > slack,
                        RowKind::Le => constant > slack,
                    }
                }
                (1, Some((j, a))) if a != 0.0 => {
                    let v = -constant / a;
                    match row.kind {
                        RowKind::Eq => {
                            fixed[j] = Some(v);
                            order.push((j, Pin::Eq(r)));
                            changed = true;
                        }
                        RowKind::Le if a > 0.0 && v < hi[j].0 => hi[j] = (v, r),
                        RowKind::Le if a < 0.0 && v > lo[j].0 => lo[j] = (v, r),
                        RowKind::Le => {}
                    }
                }
                _ => {}
            }
        }
        for j in 0..n {
            if fixed[j].is_some() || !lo[j].0.is_finite() || !hi[j].0.is_finite() {
                continue;
            }
            let width = hi[j].0 - lo[j].0;
            let scale = 1.0 + hi[j].0.abs();
            if width < -1e-9 * scale {
                infeasible = true;
            } else if width <= 1e-10 * scale {
                fixed[j] = Some(0.5 * (lo[j].0 + hi[j].0));
                order.push((j, Pin::Box { hi: hi[j].1, lo: lo[j].1 }));
                changed = true;
            }
        }
        if !changed || infeasible {
            break;
        }
    }
    Presolve {
        fixed,
        order,
        infeasible,
    }
}

pub fn solve(p: &ConvexProgram, opts: IpmOptions) -> IpmResult {
    let pre = presolve(p);
    let mut x: Vec<f64> = pre.fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut mult = vec![0.0; p.rows.len()];
    if pre.infeasible {
        return IpmResult {
            status: IpmStatus::Infeasible,
            objective: p.objective(&x),
            x,
            mult,
            iterations: 0,
        };
    }
    let free: Vec<usize> = (0..p.n()).filter(|&j| pre.fixed[j].is_none()).collect();
    let mut local = vec![usize::MAX; p.n()];
    let mut red = ConvexProgram::new();
    for (k, &j) in free.iter().enumerate() {
        local[j] = k;
        red.add_var(p.names[j].clone());
        red.obj_lin[k] = p.obj_lin[j];
        red.obj_quad[k] = p.obj_quad[j];
    }
    let mut kept = vec![];
    for (r, row) in p.rows.iter().enumerate() {
        if row.vars().all(|j| local[j] == usize::MAX) {
            continue;
        }
        let mut out = Row {
            lin: vec![],
            quad: vec![],
            power: None,
            ..row.clone()
        };
        for &(j, c) in &row.lin {
            match pre.fixed[j] {
                Some(v) => out.rhs -= c * v,
                None => out.lin.push((local[j], c)),
            }
        }
        for &(j, c) in &row.quad {
            match pre.fixed[j] {
                Some(v) => out.rhs -= c * v * v,
                None if c != 0.0 => out.quad.push((local[j], c)),
                None => {}
            }
        }
        if let Some(pw) = row.power {
            match pre.fixed[pw.var] {
                Some(v) => out.rhs -= pw.value(v),
                None if pw.beta == 1.0 => out.lin.push((local[pw.var], pw.alpha)),
                None => out.power = Some(Power { var: local[pw.var], ..pw }),
            }
        }
        red.add_row(out);
        kept.push(r);
    }
    let res = if free.is_empty() {
        IpmResult {
            status: IpmStatus::Converged,
            x: vec![],
            mult: vec![],
            iterations: 0,
            objective: 0.0,
        }
    } else {
        conic(&red, opts)
    };
    for (k, &j) in free.iter().enumerate() {
        x[j] = res.x[k];
    }
    for (i, &r) in kept.iter().enumerate() {
        mult[r] = res.mult[i];
    }
    if res.status == IpmStatus::Converged {
        recover_multipliers(p, &pre, &x, &mut mult);
    }
    IpmResult {
        status: res.status,
        objective: p.objective(&x),
        x,
        mult,
        iterations: res.iterations,
    }
}

/// Fill in multipliers of rows removed by presolve, processing pinned
/// variables in reverse order so later pins are known before earlier ones.
fn recover_multipliers(p: &ConvexProgram, pre: &Presolve, x: &[f64], mult: &mut [f64]) {
    let mut rows_of: Vec<Vec<usize>> = vec![vec![]; p.n()];
    for (r, row) in p.rows.iter().enumerate() {
        for j in row.vars() {
            if rows_of[j].last() != Some(&r) {
                rows_of[j].push(r);
            }
        }
    }
    let grad = p.objective_grad(x);
    let coef = |r: usize, j: usize| -> f64 {
        p.rows[r].gradient(x).iter().filter(|e| e.0 == j).map(|e| e.1).sum()
    };
    for (j, pin) in pre.order.iter().rev() {
        let j = *j;
        let pinning = match pin {
            Pin::Eq(r) => [*r, *r],
            Pin::Box { hi, lo } => [*hi, *lo],
        };
        let mut resid = grad[j];
        for &r in &rows_of[j] {
            if !pinning.contains(&r) {
                resid += mult[r] * coef(r, j);
            }
        }
        match pin {
            Pin::Eq(r) => mult[*r] = -resid / coef(*r, j),
            // Only the side whose multiplier comes out non-negative binds.
            Pin::Box { hi, lo } if resid <= 0.0 => {
                mult[*hi] = -resid / coef(*hi, j);
                mult[*lo] = 0.0;
            }
            Pin::Box { hi, lo } => {
                mult[*lo] = -resid / coef(*lo, j);
                mult[*hi] = 0.0;
            }
        }
    }
}

/// Conic rows assembled for Clarabel: `s = b - A x ∈ K`.
#[derive(Default)]
struct ConicRows {
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
}

impl ConicRows {
    /// Appends the row `b - Σ a_j x_j`.
    fn push(&mut self, a: impl IntoIterator<Item = (usize, f64)>, b: f64) {
        let i = self.b.len();
        for (j, v) in a {
            if v != 0.0 {
                self.cols[j].push((i, v));
            }
        }
        self.b.push(b);
    }
}

fn conic(p: &ConvexProgram, opts: IpmOptions) -> IpmResult {
    let n = p.n();
    let mut m = ConicRows {
        cols: vec![vec![]; n],
        b: vec![],
    };
    let mut cones: Vec<SupportedConeT<f64>> = vec![];
    // First conic row of each program row.
    let mut at = vec![0; p.rows.len()];
    let eq: Vec<usize> = (0..p.rows.len()).filter(|&r| p.rows[r].kind == RowKind::Eq).collect();
    let lin_le: Vec<usize> = (0..p.rows.len())
        .filter(|&r| p.rows[r].kind == RowKind::Le && p.rows[r].is_linear())
        .collect();
    let curved: Vec<usize> = (0..p.rows.len()).filter(|&r| !p.rows[r].is_linear()).collect();
    for &r in eq.iter().chain(&lin_le) {
        at[r] = m.b.len();
        m.push(p.rows[r].lin.iter().copied(), p.rows[r].rhs);
    }
    if !eq.is_empty() {
        cones.push(ZeroConeT(eq.len()));
    }
    if !lin_le.is_empty() {
        cones.push(NonnegativeConeT(lin_le.len()));
    }
    // L(x) = rhs - lin·x is the linear room the curved part must fit into.
    for &r in &curved {
        let row = &p.rows[r];
        at[r] = m.b.len();
        let room = |scale: f64| row.lin.iter().map(move |&(j, c)| (j, c * scale));
        match (row.power, row.quad.is_empty()) {
            (Some(pw), true) => {
                // (L/(α·c^(β-1)), c, u) ∈ K_pow(1/β) with c a typical speed
                // keeps all three entries on the same scale.
                let k = 1.0 / (pw.alpha * power_scale(p, pw.var).powf(pw.beta - 1.0));
                m.push(room(k), row.rhs * k);
                m.push([], power_scale(p, pw.var));
                m.push([(pw.var, -1.0)], 0.0);
                cones.push(PowerConeT(1.0 / pw.beta));
            }
            (None, false) => {
                // ‖w‖² <= t  ⇔  ‖(w, (t-1)/2)‖ <= (t+1)/2, on the row divided
                // by its largest quadratic part so t is of order one.
                let k = 1.0 / quad_scale(p, row);
                m.push(room(0.5 * k), 0.5 * (row.rhs * k + 1.0));
                m.push(room(0.5 * k), 0.5 * (row.rhs * k - 1.0));
                for &(j, c) in &row.quad {
                    m.push([(j, -(c * k).sqrt())], 0.0);
                }
                cones.push(SecondOrderConeT(row.quad.len() + 2));
            }
            _ => panic!("row mixes quadratic and power terms"),
        }
    }
    let a = csc(m.b.len(), &mut m.cols);
    let mut pcols: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|j| match p.obj_quad[j] {
            0.0 => vec![],
            q => vec![(j, 2.0 * q)],
        })
        .collect();
    let pm = csc(n, &mut pcols);
    let settings = DefaultSettingsBuilder::default()
        .verbose(std::env::var("SPS_SOLVER_LOG").is_ok())
        .max_iter(opts.max_iter as u32)
        .tol_gap_abs(opts.tol)
        .tol_gap_rel(opts.tol)
        .tol_feas(opts.tol)
        .build()
        .expect("valid solver settings");
    let failed = |status| IpmResult {
        status,
        objective: f64::NAN,
        x: vec![0.0; n],
        mult: vec![0.0; p.rows.len()],
        iterations: 0,
    };
    let Ok(mut solver) = DefaultSolver::new(&pm, &p.obj_lin, &a, &m.b, &cones, settings) else {
        return failed(IpmStatus::Diverged);
    };
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => IpmStatus::Converged,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => IpmStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => IpmStatus::Diverged,
        _ => IpmStatus::MaxIterations,
    };
    let mut mult = vec![0.0; p.rows.len()];
    if status == IpmStatus::Converged {
        for &r in eq.iter().chain(&lin_le) {
            mult[r] = sol.z[at[r]];
        }
        for &r in &curved {
            let z = &sol.z[at[r]..];
            mult[r] = match p.rows[r].power {
                Some(pw) => z[0] / (pw.alpha * power_scale(p, pw.var).powf(pw.beta - 1.0)),
                None => 0.5 * (z[0] + z[1]) / quad_scale(p, &p.rows[r]),
            };
        }
    }
    IpmResult {
        status,
        objective: p.objective(&sol.x),
        x: sol.x.clone(),
        mult,
        iterations: sol.iterations as usize,
    }
}

/// Tightest positive upper bound on `x_u` from a single-variable row.
fn upper_bound(p: &ConvexProgram, u: usize) -> Option<f64> {
    p.rows
        .iter()
        .filter(|r| r.is_linear() && r.kind == RowKind::Le)
        .filter_map(|r| match r.lin.as_slice() {
            [(j, c)] if *j == u && *c > 0.0 && r.rhs > 0.0 => Some(r.rhs / c),
            _ => None,
        })
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
}

fn power_scale(p: &ConvexProgram, u: usize) -> f64 {
    upper_bound(p, u).unwrap_or(1.0)
}

/// Largest value the quadratic part of `row` can take, at least 1.
fn quad_scale(p: &ConvexProgram, row: &Row) -> f64 {
    row.quad
        .iter()
        .map(|&(j, c)| c * upper_bound(p, j).unwrap_or(1.0).powi(2))
        .sum::<f64>()
        .max(1.0)
}

fn csc(m: usize, cols: &mut [Vec<(usize, f64)>]) -> CscMatrix<f64> {
    let mut colptr = vec![0];
    let mut rowval: Vec<usize> = vec![];
    let mut nzval: Vec<f64> = vec![];
    for c in cols.iter_mut() {
        c.sort_by_key(|e| e.0);
        let start = rowval.len();
        for &(i, v) in c.iter() {
            if rowval.len() > start && rowval.last() == Some(&i) {
                *nzval.last_mut().unwrap() += v;
            } else {
                rowval.push(i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(m, cols.len(), colptr, rowval, nzval)
}
