//! Run settings resolved from flags, environment and an optional JSON file.
//!
//! Flags and environment variables are merged by clap; whatever neither
//! supplies falls back to the file, then to the built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sps_core::lnbd::LnbdConfig;
use sps_core::oracle::DEFAULT_LIMIT;
use sps_core::schedule::Algorithm;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub algorithm: Option<String>,
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    pub phi: Option<f64>,
    pub phi_profile: Option<Vec<f64>>,
    pub oracle_limit: Option<usize>,
    pub sequential: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| crate::Invalid(format!("config {}: {e}", path.display())).into())
    }
}

/// Solver knobs as given on the command line.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SolverArgs {
    /// benders, lnbd or oracle.
    #[arg(short, long)]
    pub algorithm: Option<String>,
    /// Absolute upper/lower bound gap at which the loop stops.
    #[arg(long, env = "SPS_EPSILON")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Constant LNBD split; the last interval is always 1.
    #[arg(long, env = "SPS_PHI", conflicts_with = "phi_profile")]
    pub phi: Option<f64>,
    /// File with one LNBD split value per interval (JSON array or
    /// whitespace/comma separated).
    #[arg(long)]
    pub phi_profile: Option<PathBuf>,
    /// Largest binary count the oracle will enumerate.
    #[arg(long)]
    pub oracle_limit: Option<usize>,
    /// Run every data-parallel loop on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// JSON file with defaults for any of the options above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Phi {
    Constant(f64),
    Profile(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub max_iter: usize,
    pub phi: Phi,
    pub oracle_limit: usize,
    pub sequential: bool,
}

pub fn parse_algorithm(name: &str) -> Result<Algorithm> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "benders" => Algorithm::Benders,
        "lnbd" => Algorithm::Lnbd,
        "oracle" => Algorithm::Oracle,
        other => bail!(crate::Invalid(format!("unknown algorithm {other:?}"))),
    })
}

fn read_profile(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading phi profile {}", path.display()))?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| crate::Invalid(format!("phi profile {}: bad value {t:?}", path.display())).into())
        })
        .collect()
}

impl SolverArgs {
    pub fn resolve(&self) -> Result<Settings> {
        let file = FileConfig::load(self.config.as_deref())?;
        let algorithm = match self.algorithm.as_deref().or(file.algorithm.as_deref()) {
            Some(name) => parse_algorithm(name)?,
            None => Algorithm::Benders,
        };
        let phi = if let Some(p) = &self.phi_profile {
            Phi::Profile(read_profile(p)?)
        } else if let Some(p) = self.phi {
            Phi::Constant(p)
        } else if let Some(v) = file.phi_profile {
            Phi::Profile(v)
        } else {
            Phi::Constant(file.phi.unwrap_or(0.5))
        };
        let epsilon = self.epsilon.or(file.epsilon).unwrap_or(1e-2);
        if !(epsilon > 0.0) {
            bail!(crate::Invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Settings {
            algorithm,
            epsilon,
            max_iter: self.max_iter.or(file.max_iter).unwrap_or(500),
            phi,
            oracle_limit: self.oracle_limit.or(file.oracle_limit).unwrap_or(DEFAULT_LIMIT),
            sequential: self.sequential || file.sequential.unwrap_or(false),
        })
    }
}

impl Settings {
    pub fn lnbd(&self, horizon: usize) -> LnbdConfig {
        let mut cfg = match &self.phi {
            Phi::Constant(p) => LnbdConfig::constant(*p, horizon),
            Phi::Profile(v) => LnbdConfig {
                phi: v.clone(),
                ..LnbdConfig::constant(0.5, horizon)
            },
        };
        cfg.epsilon = self.epsilon;
        cfg.max_outer_iter = self.max_iter;
        cfg.exec = self.exec();
        cfg
    }

    pub fn exec(&self) -> sps_core::par::Execution {
        if self.sequential {
            sps_core::par::Execution::Sequential
        } else {
            sps_core::par::Execution::Parallel
        }
    }
}
