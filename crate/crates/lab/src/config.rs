//! Declarative run configuration in TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stasep_core::lpp_sim::WeightModel;
use stasep_core::tasep_sim::TasepConfig;

use crate::LabError;

/// TASEP run file; the keys are exactly the fields of `TasepConfig`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasepFile {
    pub rho: f64,
    pub t_max: f64,
    pub window_halfwidth: usize,
    pub replicas: u64,
    pub master_seed: u64,
    pub observation_sites: Vec<i64>,
}

impl TasepFile {
    pub fn to_config(&self) -> Result<TasepConfig, LabError> {
        let c = TasepConfig {
            rho: self.rho,
            t_max: self.t_max,
            window_halfwidth: self.window_halfwidth,
            replicas: self.replicas,
            master_seed: self.master_seed,
            observation_sites: self.observation_sites.clone(),
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    StationaryZeta { rho: f64 },
    AbExponential { a: f64, b: f64 },
    AbExponentialZeroCorner { a: f64, b: f64 },
    Geometric { q: f64, alpha: f64, beta: f64 },
}

impl From<ModelSpec> for WeightModel {
    fn from(m: ModelSpec) -> Self {
        match m {
            ModelSpec::StationaryZeta { rho } => WeightModel::StationaryZeta { rho },
            ModelSpec::AbExponential { a, b } => WeightModel::AbExponential { a, b },
            ModelSpec::AbExponentialZeroCorner { a, b } => WeightModel::AbExponentialZeroCorner { a, b },
            ModelSpec::Geometric { q, alpha, beta } => WeightModel::Geometric { q, alpha, beta },
        }
    }
}

/// LPP run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LppFile {
    pub m: usize,
    pub n: usize,
    pub replicas: u64,
    pub master_seed: u64,
    pub model: ModelSpec,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LabError> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}
