//! Dataset generation, adversarial training, risk estimation and sweeps.

pub mod csv;
pub mod dataset;
pub mod report;
pub mod sweep;
pub mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::AttackConfig;
use crate::bounds::BoundConfig;
use crate::embeddings::{EmbeddingSpec, Family};
use crate::error::{Error, Result};
use crate::model::Measurement;

pub use dataset::{gen_dataset, GaussianTaskSpec};
pub use sweep::{sweep_dimension, sweep_noise, Axis, SweepConfig};
pub use train::{estimate_risks, train_adversarial, Optimizer, RiskTable, TrainConfig, TrainOutcome};

/// Embedding block of the config; the input dimension comes from the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub family: Family,
    pub layers: usize,
    pub fixed_unitary_seed: u64,
    pub depolarize_lambda: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            family: Family::Angle,
            layers: 1,
            fixed_unitary_seed: 0,
            depolarize_lambda: 0.0,
        }
    }
}

impl EmbeddingConfig {
    pub fn spec(&self, d: usize) -> EmbeddingSpec {
        EmbeddingSpec {
            family: self.family,
            input_dim: d,
            layers: if self.family.is_layered() { self.layers } else { 1 },
            fixed_unitary_seed: self.fixed_unitary_seed,
            depolarize_lambda: self.depolarize_lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub layers: usize,
    pub measurement: Measurement,
    pub alpha: f64,
    pub gamma: f64,
    pub num_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            measurement: Measurement::ZAll,
            alpha: 10.0,
            gamma: 1.0,
            num_classes: 2,
        }
    }
}

/// Whole experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub task: GaussianTaskSpec,
    pub embedding: EmbeddingConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub attack: AttackConfig,
    pub bounds: BoundConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Applies the global --seed override to every seeded block.
    pub fn reseed(&mut self, seed: u64) {
        self.task.seed = seed;
        self.train.seed = seed;
        self.attack.seed = seed;
    }
}

/// Worker pool honoring QADVLAB_THREADS (unset or 0 means one per core).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var("QADVLAB_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("QADVLAB_THREADS must be a non-negative integer, got '{v}'")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}
