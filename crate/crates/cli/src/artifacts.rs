//! On-disk artifact formats shared by the subcommands: the model envelope
//! (with the resolved run config echoed inside), the ridge-baseline
//! document, and the predictions JSONL lines.

use crate::error::{CliError, CliResult};
use affectcast_core::baselines::{RidgeModel, StandardScaler};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Every model file carries the resolved run settings next to the model.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: String,
    pub run: serde_json::Value,
    pub model: serde_json::Value,
}

pub fn write_envelope<M: Serialize>(
    path: &Path,
    kind: &str,
    run: serde_json::Value,
    model: &M,
) -> CliResult<()> {
    let envelope = Envelope {
        kind: kind.to_string(),
        run,
        model: serde_json::to_value(model)?,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_envelope(path: &Path) -> CliResult<Envelope> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read model {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub const BASELINE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Previous score of the target dimension alone.
    Prev,
    /// Previous score plus the entry's precomputed feature vector.
    FeaturesPrev,
}

/// One ridge regressor with the standardization fitted on its training
/// split folded alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledRidge {
    pub scaler: StandardScaler<f64>,
    pub model: RidgeModel<f64>,
}

impl ScaledRidge {
    pub fn predict(&self, raw: &[f64]) -> CliResult<f64> {
        let x = self.scaler.transform(raw);
        Ok(self.model.predict(&x).map_err(CliError::from)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineDoc {
    pub format_version: u32,
    pub kind: BaselineKind,
    pub lambda: f64,
    pub valence: ScaledRidge,
    pub arousal: ScaledRidge,
}

/// One assessment prediction per entry.
#[derive(Debug, Serialize, Deserialize)]
pub struct AssessmentLine {
    pub user_id: String,
    pub seq: u32,
    pub v_hat: f64,
    pub a_hat: f64,
}

/// One transition prediction per consecutive pair, keyed by the current
/// entry's seq. Single-target models omit the other field.
#[derive(Debug, Serialize, Deserialize)]
pub struct TransitionLine {
    pub user_id: String,
    pub seq: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dv_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub da_hat: Option<f64>,
}

pub fn write_jsonl<T: Serialize>(path: &Path, lines: &[T]) -> CliResult<()> {
    let mut out = String::new();
    for line in lines {
        out.push_str(&serde_json::to_string(line)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line)
            .map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        out.push(value);
    }
    Ok(out)
}
