//! Settings file: TOML-style `key = value` lines. Command-line flags override it.

use std::path::{Path, PathBuf};

use clipwise_core::nnkern::TrainConfig;
use serde::Deserialize;

use crate::error::{read_text, AppError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub corpus: Option<PathBuf>,
    pub channels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Where `train-*` writes bundles and `serve` looks for them.
    pub models_dir: Option<PathBuf>,
    pub score_log: Option<PathBuf>,
    pub bind: Option<String>,
    pub seed: Option<u64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub l2: Option<f64>,
    pub hidden: Option<usize>,
    pub attention: Option<usize>,
    pub projection: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// Training settings, falling back to `defaults` for unset keys.
    pub fn train(&self, defaults: TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(defaults.learning_rate),
            epochs: self.epochs.unwrap_or(defaults.epochs),
            batch_size: self.batch_size.unwrap_or(defaults.batch_size),
            seed: self.seed.unwrap_or(defaults.seed),
            l2: self.l2.unwrap_or(defaults.l2),
        }
    }
}
