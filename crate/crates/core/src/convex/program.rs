//! Convex program representation shared by the builder, the interior-point
//! solver, the KKT checker and the verifier-agreement tests.
//!
//! Objective: `constant + Σ lin_j x_j + Σ quad_j x_j²` with `quad_j >= 0`.
//! Rows: `Σ lin + Σ quad x² + power(x) - rhs` compared to zero, where the
//! power term is `α·max(u, 0)^β` with `β >= 1`. Equality rows are linear.

use serde::Serialize;

/// Which model equation a row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Tag {
    GenLimit,
    Ramp,
    EsmPower,
    EsmEnergy,
    EsmRecursion,
    Shed,
    PropulsionLimit,
    SpeedLink,
    SpeedLimit,
    Balance,
    EsmAggregatePower,
    EsmAggregateEnergy,
    Eeoi,
    Distance,
    SlackNonneg,
    Fix,
    EsmCap,
    /// Elastic slack bound, only in feasibility programs.
    Elastic,
}

impl Tag {
    pub fn label(self) -> &'static str {
        match self {
            Tag::GenLimit => "generator output limits",
            Tag::Ramp => "generator ramp limit",
            Tag::EsmPower => "ESM power limits",
            Tag::EsmEnergy => "ESM energy limits",
            Tag::EsmRecursion => "ESM energy recursion",
            Tag::Shed => "load shedding fraction in [0, 1]",
            Tag::PropulsionLimit => "propulsion power limits",
            Tag::SpeedLink => "propulsion power covers speed",
            Tag::SpeedLimit => "speed within limits",
            Tag::Balance => "power balance",
            Tag::EsmAggregatePower => "aggregate ESM power",
            Tag::EsmAggregateEnergy => "aggregate ESM energy",
            Tag::Eeoi => "EEOI limit",
            Tag::Distance => "voyage distance with shortfall",
            Tag::SlackNonneg => "distance shortfall non-negative",
            Tag::Fix => "binary fixing",
            Tag::EsmCap => "ESM power cap",
            Tag::Elastic => "elastic slack",
        }
    }

    /// Rows that only box a single variable and are never relaxed.
    pub fn is_box(self) -> bool {
        matches!(
            self,
            Tag::EsmPower
                | Tag::EsmEnergy
                | Tag::Shed
                | Tag::PropulsionLimit
                | Tag::SpeedLimit
                | Tag::SlackNonneg
                | Tag::Elastic
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Eq,
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Power {
    pub var: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Power {
    pub fn value(&self, u: f64) -> f64 {
        if self.beta == 1.0 {
            self.alpha * u
        } else {
            self.alpha * u.max(0.0).powf(self.beta)
        }
    }

    pub fn grad(&self, u: f64) -> f64 {
        if self.beta == 1.0 {
            self.alpha
        } else {
            self.alpha * self.beta * u.max(0.0).powf(self.beta - 1.0)
        }
    }

    pub fn hess(&self, u: f64) -> f64 {
        if self.beta == 1.0 || u <= 0.0 {
            0.0
        } else {
            // Clamp keeps 1 < β < 2 finite near zero.
            self.alpha * self.beta * (self.beta - 1.0) * u.max(1e-12).powf(self.beta - 2.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub tag: Tag,
    pub kind: RowKind,
    pub lin: Vec<(usize, f64)>,
    pub quad: Vec<(usize, f64)>,
    pub power: Option<Power>,
    pub rhs: f64,
    /// Interval the row belongs to, if any.
    pub t: Option<usize>,
    /// Equipment / part / zone index the row belongs to, if any.
    pub entity: Option<usize>,
}

impl Row {
    pub fn le(tag: Tag, lin: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row {
            tag,
            kind: RowKind::Le,
            lin,
            quad: vec![],
            power: None,
            rhs,
            t: None,
            entity: None,
        }
    }

    pub fn eq(tag: Tag, lin: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row {
            kind: RowKind::Eq,
            ..Row::le(tag, lin, rhs)
        }
    }

    pub fn at(mut self, t: usize) -> Self {
        self.t = Some(t);
        self
    }

    pub fn of(mut self, entity: usize) -> Self {
        self.entity = Some(entity);
        self
    }

    pub fn is_linear(&self) -> bool {
        self.quad.is_empty() && self.power.is_none()
    }

    /// `g(x)`; the row holds when `g <= 0` (Le) or `g == 0` (Eq).
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = -self.rhs;
        for &(j, c) in &self.lin {
            v += c * x[j];
        }
        for &(j, c) in &self.quad {
            v += c * x[j] * x[j];
        }
        if let Some(p) = &self.power {
            v += p.value(x[p.var]);
        }
        v
    }

    /// Sparse gradient, duplicates merged.
    pub fn gradient(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut g: Vec<(usize, f64)> = Vec::with_capacity(self.lin.len() + self.quad.len() + 1);
        let mut add = |j: usize, v: f64| {
            if let Some(e) = g.iter_mut().find(|e| e.0 == j) {
                e.1 += v;
            } else {
                g.push((j, v));
            }
        };
        for &(j, c) in &self.lin {
            add(j, c);
        }
        for &(j, c) in &self.quad {
            add(j, 2.0 * c * x[j]);
        }
        if let Some(p) = &self.power {
            add(p.var, p.grad(x[p.var]));
        }
        g
    }

    /// Diagonal Hessian entries.
    pub fn hessian_diag(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut h: Vec<(usize, f64)> = self.quad.iter().map(|&(j, c)| (j, 2.0 * c)).collect();
        if let Some(p) = &self.power {
            h.push((p.var, p.hess(x[p.var])));
        }
        h
    }

    /// Amount by which the row is violated at `x` (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let v = self.value(x);
        match self.kind {
            RowKind::Eq => v.abs(),
            RowKind::Le => v.max(0.0),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.lin
            .iter()
            .map(|e| e.0)
            .chain(self.quad.iter().map(|e| e.0))
            .chain(self.power.iter().map(|p| p.var))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexProgram {
    pub names: Vec<String>,
    pub obj_lin: Vec<f64>,
    pub obj_quad: Vec<f64>,
    pub obj_const: f64,
    pub rows: Vec<Row>,
}

impl ConvexProgram {
    pub fn new() -> Self {
        ConvexProgram {
            names: vec![],
            obj_lin: vec![],
            obj_quad: vec![],
            obj_const: 0.0,
            rows: vec![],
        }
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.obj_lin.push(0.0);
        self.obj_quad.push(0.0);
        self.names.len() - 1
    }

    pub fn add_row(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut f = self.obj_const;
        for j in 0..self.n() {
            f += self.obj_lin[j] * x[j] + self.obj_quad[j] * x[j] * x[j];
        }
        f
    }

    pub fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|j| self.obj_lin[j] + 2.0 * self.obj_quad[j] * x[j])
            .collect()
    }

    /// Largest row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max)
    }
}

impl Default for ConvexProgram {
    fn default() -> Self {
        Self::new()
    }
}
