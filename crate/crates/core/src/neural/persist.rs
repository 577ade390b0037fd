//! Versioned JSON persistence for dense networks.
//!
//! The document stores layer specs plus one flat parameter array in
//! row-major order. Parameters are written as JSON numbers with the
//! shortest decimal form that parses back to the same bits, so a
//! save/load cycle is exact.

use super::net::{DenseNet, LayerSpec};
use super::rng::RngStream;
use crate::scalar::{to_f64, Scalar};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("model document is invalid: {0}")]
    InvalidDocument(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetDoc {
    pub format_version: u32,
    pub layers: Vec<LayerSpec>,
    pub params: Vec<f64>,
}

pub fn net_to_doc<T: Scalar>(net: &DenseNet<T>) -> NetDoc {
    NetDoc {
        format_version: FORMAT_VERSION,
        layers: net.specs(),
        params: net.flatten_params().iter().map(|&p| to_f64(p)).collect(),
    }
}

pub fn net_from_doc<T: Scalar>(doc: &NetDoc) -> Result<DenseNet<T>, PersistError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion(doc.format_version));
    }
    let mut rng = RngStream::new(0);
    let mut net = DenseNet::new(doc.layers.clone(), &mut rng)
        .map_err(|e| PersistError::InvalidDocument(e.to_string()))?;
    let params: Vec<T> = doc
        .params
        .iter()
        .map(|&p| T::from_f64(p).expect("f64 fits the scalar"))
        .collect();
    net.set_params(&params)
        .map_err(|e| PersistError::InvalidDocument(e.to_string()))?;
    Ok(net)
}
