//! Solver output: the operating schedule and the run report.

use serde::{Deserialize, Serialize};

use crate::model::ShipScenario;

/// A full operating plan. Matrices are indexed `[entity][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub delta_g: Vec<Vec<u8>>,
    /// Startup indicators, implied by `delta_g` and the initial states.
    pub y_g: Vec<Vec<u8>>,
    pub p_g: Vec<Vec<f64>>,
    /// Positive when discharging.
    pub p_e: Vec<Vec<f64>>,
    /// Stored energy at the end of each interval.
    pub e_e: Vec<Vec<f64>>,
    /// Per propulsion module.
    pub p_pr: Vec<Vec<f64>>,
    /// Shed fraction of each island part's non-vital load.
    pub rho: Vec<Vec<f64>>,
    /// Per zone.
    pub s_p: Vec<Vec<u8>>,
    pub s_s: Vec<Vec<u8>>,
    pub d_d: f64,
}

impl Schedule {
    /// All-zero schedule shaped for `s` with `parts` island parts.
    pub fn zeros(s: &ShipScenario, parts: usize) -> Self {
        let t = s.horizon();
        let f = |n: usize| vec![vec![0.0; t]; n];
        let b = |n: usize| vec![vec![0u8; t]; n];
        Schedule {
            delta_g: b(s.generators.len()),
            y_g: b(s.generators.len()),
            p_g: f(s.generators.len()),
            p_e: f(s.esms.len()),
            e_e: f(s.esms.len()),
            p_pr: f(s.propulsion.module_count.max(1)),
            rho: f(parts),
            s_p: b(s.topology.zone_count),
            s_s: b(s.topology.zone_count),
            d_d: 0.0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.p_pr.first().map_or(0, |r| r.len())
    }

    /// Aggregate propulsion power at interval `t`.
    pub fn propulsion_total(&self, t: usize) -> f64 {
        self.p_pr.iter().map(|r| r[t]).sum()
    }

    /// Recompute startup indicators from commitments and initial states.
    pub fn fill_startups(&mut self, s: &ShipScenario) {
        for (g, spec) in s.generators.iter().enumerate() {
            let mut prev = u8::from(spec.initial_on);
            for t in 0..self.delta_g[g].len() {
                let cur = self.delta_g[g][t];
                self.y_g[g][t] = u8::from(cur == 1 && prev == 0);
                prev = cur;
            }
        }
    }
}

/// Cost split of a schedule, all in monetary units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub fuel: f64,
    /// ξ_e-weighted ESM life-cycle cost.
    pub esm: f64,
    /// ξ_l-weighted shed load.
    pub shedding: f64,
    /// h-weighted distance shortfall.
    pub distance: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Benders,
    Lnbd,
    Oracle,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Benders => "benders",
            Algorithm::Lnbd => "lnbd",
            Algorithm::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub converged: bool,
    pub cost: CostBreakdown,
    /// Shed non-vital energy over the horizon, MWh.
    pub p_ls_total: f64,
    pub d_d: f64,
    /// Zone-interval switch changes.
    pub n_rs: usize,
    pub iterations: usize,
    /// Best upper bound after each iteration.
    pub upper_bounds: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    /// Largest KKT residual over the optimal subproblems solved.
    pub kkt_max: f64,
    pub wall_time_s: f64,
    /// Energy-repair passes (LNBD only).
    pub repairs: usize,
    pub notes: Vec<String>,
}
