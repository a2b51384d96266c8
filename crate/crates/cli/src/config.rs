//! Training configuration file: JSON with the solver/trainer knobs, every
//! field optional. Command-line flags override file values.

use std::path::Path;

use serde::Deserialize;

use fairlin_core::baseline::BaselineConfig;
use fairlin_core::ccp::CcpConfig;
use fairlin_core::error::{Error, Result};
use fairlin_core::solver::SolverConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub l2: Option<f64>,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default)]
    pub ccp: CcpOverrides,
    #[serde(default)]
    pub baseline: BaselineOverrides,
    #[serde(default)]
    pub postprocess: PostprocessOverrides,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcpOverrides {
    pub tau0: Option<f64>,
    pub mu: Option<f64>,
    pub tau_max: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub subproblem_tol: Option<f64>,
    pub subproblem_max_iter: Option<usize>,
    pub convergence_tol: Option<f64>,
    pub smoothing0: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineOverrides {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub max_rounds: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostprocessOverrides {
    pub epsilon: Option<f64>,
    pub allow_randomized: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Data(format!("config {}: {e}", p.display())))
            }
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.solver.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.solver.max_iter {
            cfg.max_iter = v;
        }
        cfg
    }

    pub fn ccp_config(&self) -> CcpConfig {
        let mut cfg = CcpConfig::default();
        let o = &self.ccp;
        if let Some(v) = o.tau0 {
            cfg.tau0 = v;
        }
        if let Some(v) = o.mu {
            cfg.mu = v;
        }
        if let Some(v) = o.tau_max {
            cfg.tau_max = v;
        }
        if let Some(v) = o.max_outer_iters {
            cfg.max_outer_iters = v;
        }
        if let Some(v) = o.subproblem_tol {
            cfg.subproblem_tol = v;
        }
        if let Some(v) = o.subproblem_max_iter {
            cfg.subproblem_max_iter = v;
        }
        if let Some(v) = o.convergence_tol {
            cfg.convergence_tol = v;
        }
        if let Some(v) = o.smoothing0 {
            cfg.smoothing0 = v;
        }
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        cfg
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        let mut cfg = BaselineConfig { solver: self.solver_config(), ..Default::default() };
        if let Some(v) = self.baseline.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.baseline.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.baseline.max_rounds {
            cfg.max_rounds = v;
        }
        cfg
    }
}
