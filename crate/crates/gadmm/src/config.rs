//! Declarative experiment configuration (JSON).

use std::path::{Path, PathBuf};

use gadmm_core::metrics::{AcvNorm, Attribution};
use gadmm_core::model::LossKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gadmm,
    Dgadmm,
    AdmmPs,
    Gd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gadmm => "gadmm",
            Self::Dgadmm => "dgadmm",
            Self::AdmmPs => "admm_ps",
            Self::Gd => "gd",
        }
    }

    pub fn is_centralized(self) -> bool {
        matches!(self, Self::AdmmPs | Self::Gd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Linear,
    Logistic,
}

impl From<Task> for LossKind {
    fn from(t: Task) -> Self {
        match t {
            Task::Linear => LossKind::Linear,
            Task::Logistic => LossKind::Logistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    #[default]
    Unit,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionKind {
    #[default]
    Max,
    Sum,
}

impl From<AttributionKind> for Attribution {
    fn from(a: AttributionKind) -> Self {
        match a {
            AttributionKind::Max => Attribution::MaxOverReceivers,
            AttributionKind::Sum => Attribution::SumOverReceivers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcvKind {
    #[default]
    L1,
    L2,
}

impl From<AcvKind> for AcvNorm {
    fn from(a: AcvKind) -> Self {
        match a {
            AcvKind::L1 => AcvNorm::L1,
            AcvKind::L2 => AcvNorm::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic {
        samples: usize,
        features: usize,
        /// Defaults to the experiment seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub task: Task,
    pub n_workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Iterations between chain rebuilds (dgadmm only, default 15).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handover_duals: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rebuild_cost_rounds: Option<usize>,
    /// Gradient step (gd only, default `1/L`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default = "default_target")]
    pub target_error: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cost_model: CostKind,
    /// Side of the square placement area in meters.
    #[serde(default = "default_area")]
    pub area_side: f64,
    /// Re-draw the placement every this many iterations (energy costs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility_period: Option<usize>,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub attribution: AttributionKind,
    #[serde(default)]
    pub acv_norm: AcvKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_target() -> f64 {
    1e-4
}

fn default_max_iters() -> usize {
    10_000
}

fn default_area() -> f64 {
    250.0
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let cfg = Self::from_json(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let alg = self.algorithm;
        let n = self.n_workers;
        if n < 2 {
            return Err(field("n_workers", "need at least 2 workers"));
        }
        if matches!(alg, Algorithm::Gadmm | Algorithm::Dgadmm) && n % 2 == 1 {
            return Err(field("n_workers", format!("{} needs an even worker count, got {n}", alg.name())));
        }
        match (alg, self.rho) {
            (Algorithm::Gd, Some(_)) => return Err(field("rho", "not used by gd")),
            (Algorithm::Gd, None) => {}
            (_, None) => return Err(field("rho", format!("required for {}", alg.name()))),
            (_, Some(r)) if !(r > 0.0 && r.is_finite()) => return Err(field("rho", "must be positive and finite")),
            _ => {}
        }
        if alg != Algorithm::Dgadmm {
            for (name, set) in [
                ("tau", self.tau.is_some()),
                ("handover_duals", self.handover_duals.is_some()),
                ("rebuild_cost_rounds", self.rebuild_cost_rounds.is_some()),
            ] {
                if set {
                    return Err(field(name, "only valid for dgadmm"));
                }
            }
        }
        if self.tau == Some(0) {
            return Err(field("tau", "must be at least 1"));
        }
        match self.step_size {
            Some(_) if alg != Algorithm::Gd => return Err(field("step_size", "only valid for gd")),
            Some(s) if !(s > 0.0 && s.is_finite()) => return Err(field("step_size", "must be positive and finite")),
            _ => {}
        }
        if self.target_error.is_nan() || self.target_error < 0.0 {
            return Err(field("target_error", "must be non-negative"));
        }
        if self.max_iters == 0 {
            return Err(field("max_iters", "must be at least 1"));
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(field("area_side", "must be positive and finite"));
        }
        if let Some(p) = self.mobility_period {
            if p == 0 {
                return Err(field("mobility_period", "must be at least 1"));
            }
            if self.cost_model != CostKind::Energy {
                return Err(field("mobility_period", "needs the energy cost model"));
            }
            if alg.is_centralized() {
                return Err(field("mobility_period", "not supported for centralized algorithms"));
            }
        }
        if let DatasetSource::Synthetic { samples, features, .. } = self.dataset {
            if features == 0 {
                return Err(field("dataset.features", "must be at least 1"));
            }
            if samples < n {
                return Err(field("dataset.samples", format!("{samples} samples cannot cover {n} workers")));
            }
        }
        Ok(())
    }

    /// Seed used to generate synthetic data.
    pub fn data_seed(&self) -> u64 {
        match self.dataset {
            DatasetSource::Synthetic { seed, .. } => seed.unwrap_or(self.seed),
            DatasetSource::Csv { .. } => self.seed,
        }
    }
}
