//! Optional TOML run config. Every section mirrors one module's config
//! surface; unknown keys are errors. Command-line flags override file
//! values, which override built-in defaults.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub io: IoSection,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub ae: AeSection,
    #[serde(default)]
    pub maxent: MaxEntSection,
    #[serde(default)]
    pub forecaster: ForecasterSection,
    #[serde(default)]
    pub baseline: BaselineSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub strict: Option<bool>,
    pub lexicon: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub users: Option<usize>,
    pub entries_min: Option<usize>,
    pub entries_max: Option<usize>,
    pub seed: Option<u64>,
    pub mean_reversion: Option<f64>,
    pub noise: Option<f64>,
    pub offset_scale: Option<f64>,
    pub unseen_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeSection {
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub binarize_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxEntSection {
    pub mode: Option<String>,
    pub latent_bits: Option<usize>,
    pub l2: Option<f64>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterSection {
    pub preset: Option<String>,
    pub target: Option<String>,
    pub history_len: Option<usize>,
    pub use_text: Option<bool>,
    pub use_clusters: Option<bool>,
    pub user_emb_dim: Option<usize>,
    pub hidden1: Option<usize>,
    pub hidden2: Option<usize>,
    pub dropout: Option<f64>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub max_epochs: Option<usize>,
    pub seed: Option<u64>,
    pub fallback_exposure: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub kind: Option<String>,
    pub lambda: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))
            }
        }
    }
}

/// Flag > config-file value > default.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
