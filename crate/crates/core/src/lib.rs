//! Modeling self-reported affect (valence, arousal) over chronologically
//! ordered user entries.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`domain`] — affect states, deltas, entries, user series, datasets
//! - [`codec`] — emotion-label grid mapping and one-hot state-vector layouts
//! - [`clusters`] — keyword lexicon producing 10-d cluster vectors and
//!   60-d indicator vectors
//! - [`neural`] — dense layers, layer norm, dropout, manual backprop,
//!   decoupled-weight-decay Adam, finite-difference gradient checking
//! - [`autoencoder`] — 60→32→10 bottleneck compressing indicators to
//!   binary latent bits
//! - [`maxent`] — pairwise maximum-entropy (Ising) model with an exactly
//!   enumerated partition function, maximum-likelihood fitting, and
//!   expectation-based decoding
//! - [`forecaster`] — sliding-window neural regressor with trainable
//!   user embeddings for next-step affect change
//! - [`baselines`] — closed-form ridge regression baselines
//! - [`metrics`] — Pearson / MAE / Fisher-z evaluation protocol
//! - [`dataio`] — JSONL dataset format, train/dev splitting, seeded
//!   synthetic-data generation
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below pin the shipped `f64` instantiations.

pub mod autoencoder;
pub mod baselines;
pub mod clusters;
pub mod codec;
pub mod dataio;
pub mod domain;
pub mod forecaster;
pub mod maxent;
pub mod metrics;
pub mod neural;
pub mod scalar;

pub use domain::{AffectDelta, AffectState, Dataset, Entry, EntryKind, UserSeries};
pub use scalar::Scalar;

/// Scalar type used by the shipped CLI and all persistence formats.
pub type Real = f64;

pub type MaxEntF64 = maxent::MaxEntModel<f64>;
pub type MaxEntF32 = maxent::MaxEntModel<f32>;
pub type DenseNetF64 = neural::DenseNet<f64>;
pub type DenseNetF32 = neural::DenseNet<f32>;
pub type AeModelF64 = autoencoder::AeModel<f64>;
pub type ForecasterF64 = forecaster::ForecasterModel<f64>;
pub type RidgeF64 = baselines::RidgeModel<f64>;
