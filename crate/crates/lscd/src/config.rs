//! JSON run configuration.
//!
//! Unknown keys are rejected and every invariant is checked at load time
//! with the offending field named, so a bad config fails before any
//! simulation starts.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{DistributionModel, GaussianPair, ModelError};
use crate::sim::{LocationConfig, SimError, UavConfig};
use crate::sweep::{Constraints, SweepParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Observation-model description, e.g.
/// {"family": "gaussian", "mu0": 0.0, "mu1": 2.0, "sigma": 1.0}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Gaussian { mu0: f64, mu1: f64, sigma: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Arc<dyn DistributionModel>, ModelError> {
        match *self {
            ModelSpec::Gaussian { mu0, mu1, sigma } => {
                Ok(Arc::new(GaussianPair::new(mu0, mu1, sigma)?))
            }
        }
    }
}

fn default_reps() -> u64 {
    2000
}

fn default_stats_reps() -> u64 {
    100_000
}

fn default_horizon() -> u64 {
    100_000_000
}

fn default_w_grid_size() -> usize {
    33
}

/// Full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model_a: ModelSpec,
    pub model_b: ModelSpec,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub n_a: u32,
    pub n_b: u32,
    pub tau: u32,
    pub e_sense: f64,
    pub e_move: f64,
    pub e_budget: f64,
    pub r_a: f64,
    pub r_b: f64,
    #[serde(default)]
    pub seed: u64,
    /// No-change replications per estimate.
    #[serde(default = "default_reps")]
    pub reps: u64,
    /// Cycle replications per (threshold, regime, start value) cell.
    #[serde(default = "default_stats_reps")]
    pub stats_reps: u64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_w_grid_size")]
    pub w_grid_size: usize,
}

impl Config {
    pub fn from_str_validated(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Config, ConfigError> {
        Config::from_str_validated(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_a.build().map_err(|e| invalid("model_a", e.to_string()))?;
        self.model_b.build().map_err(|e| invalid("model_b", e.to_string()))?;
        for (field, v) in [("gamma_a", self.gamma_a), ("gamma_b", self.gamma_b)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(field, format!("must be > 0 and finite, got {v}")));
            }
        }
        for (field, v) in [("n_a", self.n_a), ("n_b", self.n_b)] {
            if v < 1 {
                return Err(invalid(field, "must be >= 1"));
            }
        }
        for (field, v) in [("e_sense", self.e_sense), ("e_move", self.e_move)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(field, format!("must be >= 0 and finite, got {v}")));
            }
        }
        for (field, v) in [
            ("e_budget", self.e_budget),
            ("r_a", self.r_a),
            ("r_b", self.r_b),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(invalid(field, format!("must be > 0, got {v}")));
            }
        }
        if self.reps < 100 {
            return Err(invalid("reps", "must be >= 100"));
        }
        if self.stats_reps < 100 {
            return Err(invalid("stats_reps", "must be >= 100"));
        }
        if self.horizon < 1 {
            return Err(invalid("horizon", "must be >= 1"));
        }
        if self.w_grid_size < 1 {
            return Err(invalid("w_grid_size", "must be >= 1"));
        }
        Ok(())
    }

    pub fn location_a(&self) -> Result<LocationConfig, SimError> {
        LocationConfig::new(self.gamma_a, self.n_a, self.model_a.build().expect("validated"))
    }

    pub fn location_b(&self) -> Result<LocationConfig, SimError> {
        LocationConfig::new(self.gamma_b, self.n_b, self.model_b.build().expect("validated"))
    }

    pub fn uav(&self) -> Result<UavConfig, SimError> {
        UavConfig::new(self.tau, self.e_sense, self.e_move, self.e_budget)
    }

    pub fn constraints(&self) -> Result<Constraints, SimError> {
        Constraints::new(self.r_a, self.r_b, self.e_budget)
    }

    pub fn sweep_params(&self, strict: bool) -> SweepParams {
        SweepParams {
            reps: self.reps,
            stats_reps: self.stats_reps,
            w_grid_size: self.w_grid_size,
            horizon: self.horizon,
            seed: self.seed,
            strict,
        }
    }
}
