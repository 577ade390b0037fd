//! Neural regressor for next-step affect change.
//!
//! Inputs per prediction: a sliding window over the last 1-4 entries
//! (normalized state, previous change, optional precomputed text
//! features, optional cluster bits, plus a per-step presence flag for
//! zero-padded history) concatenated with a trainable user embedding.
//! Unknown users at inference fall back to the mean embedding.

use crate::domain::{delta_between, Dataset, UserSeries};
use crate::neural::{
    mse, mse_grad, net_from_doc, net_to_doc, AdamW, DenseNet, Gradients, LayerNormKind, LayerSpec,
    NetDoc, NeuralError, OptimConfig, PersistError, RngStream,
};
use crate::scalar::{real, to_f64, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Base per-step features: presence flag, v/4, a/2, dv_prev/8, da_prev/4.
const BASE_STEP_DIM: usize = 5;
const CLUSTER_DIM: usize = 10;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("entry `{user_id}`/{seq} is missing {what}")]
    MissingData { user_id: String, seq: u32, what: String },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    Both,
    ValenceOnly,
    ArousalOnly,
}

impl TargetMode {
    pub fn output_dim(&self) -> usize {
        match self {
            TargetMode::Both => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterConfig {
    pub target: TargetMode,
    pub history_len: usize,
    pub use_text: bool,
    pub use_clusters: bool,
    pub user_emb_dim: usize,
    pub hidden: (usize, usize),
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Fraction of training samples that see the mean embedding instead
    /// of their user's row, so the unseen-user fallback path is
    /// in-distribution at inference.
    pub fallback_exposure: f64,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            target: TargetMode::Both,
            history_len: 2,
            use_text: false,
            use_clusters: false,
            user_emb_dim: 2,
            hidden: (64, 32),
            dropout: 0.1,
            lr: 5e-4,
            weight_decay: 0.01,
            batch_size: 32,
            patience: 5,
            max_epochs: 200,
            seed: 7,
            fallback_exposure: 0.25,
        }
    }
}

impl ForecasterConfig {
    /// Strongest joint-target setup: both targets, two prior entries,
    /// numeric features only, 2-d user embedding.
    pub fn best_valence() -> Self {
        Self::default()
    }

    /// Strongest arousal-only setup: one prior entry, numeric features
    /// only, 4-d user embedding.
    pub fn best_arousal() -> Self {
        Self {
            target: TargetMode::ArousalOnly,
            history_len: 1,
            user_emb_dim: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        if !(1..=4).contains(&self.history_len) {
            return Err(ForecastError::InvalidConfig(format!(
                "history_len {} outside 1..=4",
                self.history_len
            )));
        }
        if self.user_emb_dim == 0 || self.hidden.0 == 0 || self.hidden.1 == 0 {
            return Err(ForecastError::InvalidConfig("zero-width dimension".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(ForecastError::InvalidConfig("zero batch size or epochs".into()));
        }
        if !(0.0..=1.0).contains(&self.fallback_exposure) {
            return Err(ForecastError::InvalidConfig(format!(
                "fallback_exposure {} outside [0,1]",
                self.fallback_exposure
            )));
        }
        Ok(())
    }
}

/// Shape of the flattened network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputLayout {
    pub history_len: usize,
    pub text_dim: usize,
    pub cluster_dim: usize,
    pub user_emb_dim: usize,
}

impl InputLayout {
    pub fn step_dim(&self) -> usize {
        BASE_STEP_DIM + self.text_dim + self.cluster_dim
    }

    pub fn total_dim(&self) -> usize {
        self.history_len * self.step_dim() + self.user_emb_dim
    }
}

/// Features for one prediction: flattened window steps (without the user
/// embedding, which the model appends at forward time).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    pub user_id: String,
    /// Seq of the newest (current) entry in the window.
    pub seq: u32,
    pub steps: Vec<f64>,
}

/// A training sample: features plus the next-step change target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub features: WindowFeatures,
    pub target_dv: f64,
    pub target_da: f64,
}

fn step_features(
    series: &UserSeries,
    idx: usize,
    layout: &InputLayout,
) -> Result<Vec<f64>, ForecastError> {
    let entry = &series.entries()[idx];
    let state = entry.state.ok_or_else(|| ForecastError::MissingData {
        user_id: entry.user_id.clone(),
        seq: entry.seq,
        what: "a gold state".into(),
    })?;
    let (dv_prev, da_prev) = if idx == 0 {
        (0.0, 0.0)
    } else {
        let prev = series.entries()[idx - 1].state.ok_or_else(|| ForecastError::MissingData {
            user_id: entry.user_id.clone(),
            seq: entry.seq,
            what: "a gold state on the previous entry".into(),
        })?;
        let d = delta_between(prev, state);
        (d.dv() as f64, d.da() as f64)
    };
    let mut out = Vec::with_capacity(layout.step_dim());
    out.push(1.0);
    out.push(state.valence() as f64 / 4.0);
    out.push(state.arousal() as f64 / 2.0);
    out.push(dv_prev / 8.0);
    out.push(da_prev / 4.0);
    if layout.text_dim > 0 {
        let features = entry.features.as_ref().ok_or_else(|| ForecastError::MissingData {
            user_id: entry.user_id.clone(),
            seq: entry.seq,
            what: "precomputed text features".into(),
        })?;
        if features.len() != layout.text_dim {
            return Err(ForecastError::LayoutMismatch(format!(
                "feature dim {} != layout text dim {}",
                features.len(),
                layout.text_dim
            )));
        }
        out.extend_from_slice(features);
    }
    if layout.cluster_dim > 0 {
        let clusters = entry.clusters.as_ref().ok_or_else(|| ForecastError::MissingData {
            user_id: entry.user_id.clone(),
            seq: entry.seq,
            what: "cluster annotations".into(),
        })?;
        if clusters.len() != layout.cluster_dim {
            return Err(ForecastError::LayoutMismatch(format!(
                "cluster dim {} != {}",
                clusters.len(),
                layout.cluster_dim
            )));
        }
        out.extend(clusters.iter().map(|&b| b as f64));
    }
    Ok(out)
}

/// Window features for predicting the step after entry `idx`. Older
/// history that does not exist is zero-padded with presence flag 0.
pub fn window_features(
    series: &UserSeries,
    idx: usize,
    layout: &InputLayout,
) -> Result<WindowFeatures, ForecastError> {
    let step_dim = layout.step_dim();
    let mut steps = Vec::with_capacity(layout.history_len * step_dim);
    for offset in (0..layout.history_len).rev() {
        if idx >= offset {
            steps.extend(step_features(series, idx - offset, layout)?);
        } else {
            steps.extend(std::iter::repeat(0.0).take(step_dim));
        }
    }
    let entry = &series.entries()[idx];
    Ok(WindowFeatures { user_id: entry.user_id.clone(), seq: entry.seq, steps })
}

fn layout_for(cfg: &ForecasterConfig, ds: &Dataset) -> Result<InputLayout, ForecastError> {
    let text_dim = if cfg.use_text {
        ds.feature_dim().ok_or_else(|| {
            ForecastError::InvalidConfig("use_text set but the dataset carries no features".into())
        })?
    } else {
        0
    };
    Ok(InputLayout {
        history_len: cfg.history_len,
        text_dim,
        cluster_dim: if cfg.use_clusters { CLUSTER_DIM } else { 0 },
        user_emb_dim: cfg.user_emb_dim,
    })
}

/// One sample per consecutive entry pair within each user; users with a
/// single entry contribute nothing.
pub fn build_windows(ds: &Dataset, cfg: &ForecasterConfig) -> Result<Vec<WindowSample>, ForecastError> {
    cfg.validate()?;
    let layout = layout_for(cfg, ds)?;
    let mut out = Vec::new();
    for series in ds.series() {
        for idx in 0..series.len().saturating_sub(1) {
            let features = window_features(series, idx, &layout)?;
            let cur = series.entries()[idx].state.expect("checked by step_features");
            let next = series.entries()[idx + 1].state.ok_or_else(|| {
                let e = &series.entries()[idx + 1];
                ForecastError::MissingData {
                    user_id: e.user_id.clone(),
                    seq: e.seq,
                    what: "a gold state".into(),
                }
            })?;
            let d = delta_between(cur, next);
            out.push(WindowSample {
                features,
                target_dv: d.dv() as f64,
                target_da: d.da() as f64,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ForecasterModel<T> {
    net: DenseNet<T>,
    layout: InputLayout,
    config: ForecasterConfig,
    user_index: HashMap<String, usize>,
    user_ids: Vec<String>,
    /// user_count x emb_dim, row-major, rows in `user_ids` order.
    embeddings: Vec<T>,
    fallback_embedding: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct ForecastTrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub n_train: usize,
    pub n_val: usize,
}

fn net_specs(layout: &InputLayout, cfg: &ForecasterConfig) -> Vec<LayerSpec> {
    vec![
        LayerSpec::relu(layout.total_dim(), cfg.hidden.0)
            .with_layer_norm(LayerNormKind::Affine)
            .with_dropout(cfg.dropout),
        LayerSpec::relu(cfg.hidden.0, cfg.hidden.1)
            .with_layer_norm(LayerNormKind::Affine)
            .with_dropout(cfg.dropout),
        LayerSpec::linear(cfg.hidden.1, cfg.target.output_dim()),
    ]
}

impl<T: Scalar> ForecasterModel<T> {
    pub fn config(&self) -> &ForecasterConfig {
        &self.config
    }

    pub fn layout(&self) -> InputLayout {
        self.layout
    }

    pub fn known_users(&self) -> &[String] {
        &self.user_ids
    }

    pub fn fallback_embedding(&self) -> &[T] {
        &self.fallback_embedding
    }

    fn embedding_of(&self, user_id: &str) -> &[T] {
        match self.user_index.get(user_id) {
            Some(&row) => {
                let d = self.layout.user_emb_dim;
                &self.embeddings[row * d..(row + 1) * d]
            }
            None => &self.fallback_embedding,
        }
    }

    fn assemble_input(&self, w: &WindowFeatures) -> Result<Vec<T>, ForecastError> {
        let expected = self.layout.history_len * self.layout.step_dim();
        if w.steps.len() != expected {
            return Err(ForecastError::LayoutMismatch(format!(
                "window carries {} step features, model expects {}",
                w.steps.len(),
                expected
            )));
        }
        let mut input: Vec<T> = w.steps.iter().map(|&v| real(v)).collect();
        input.extend_from_slice(self.embedding_of(&w.user_id));
        Ok(input)
    }

    /// Deterministic eval-mode prediction. Returns the estimated change
    /// per target; absent targets (single-target configs) are `None`.
    pub fn predict_change(&self, w: &WindowFeatures) -> Result<(Option<f64>, Option<f64>), ForecastError> {
        let input = self.assemble_input(w)?;
        let out = self.net.infer(&input)?;
        Ok(match self.config.target {
            TargetMode::Both => (Some(to_f64(out[0])), Some(to_f64(out[1]))),
            TargetMode::ValenceOnly => (Some(to_f64(out[0])), None),
            TargetMode::ArousalOnly => (None, Some(to_f64(out[0]))),
        })
    }

    /// Predictions for every consecutive pair of every user in the
    /// dataset, keyed by the current entry's (user_id, seq).
    pub fn predict_dataset(
        &self,
        ds: &Dataset,
    ) -> Result<Vec<(WindowFeatures, (Option<f64>, Option<f64>))>, ForecastError> {
        let mut out = Vec::new();
        for series in ds.series() {
            for idx in 0..series.len().saturating_sub(1) {
                let w = window_features(series, idx, &self.layout)?;
                let est = self.predict_change(&w)?;
                out.push((w, est));
            }
        }
        Ok(out)
    }

    fn target_of(&self, s: &WindowSample) -> Vec<T> {
        match self.config.target {
            TargetMode::Both => vec![real(s.target_dv), real(s.target_da)],
            TargetMode::ValenceOnly => vec![real(s.target_dv)],
            TargetMode::ArousalOnly => vec![real(s.target_da)],
        }
    }

    fn mean_val_loss(&self, samples: &[&WindowSample]) -> Result<f64, ForecastError> {
        let mut total = T::zero();
        for s in samples {
            let input = self.assemble_input(&s.features)?;
            let out = self.net.infer(&input)?;
            total += mse(&out, &self.target_of(s));
        }
        Ok(to_f64(total / real::<T>(samples.len() as f64)))
    }
}

/// Train on all consecutive-pair windows of the dataset with a 90/10
/// train/validation split and early stopping; returns the
/// best-validation checkpoint. The fallback embedding is the mean of the
/// trained user embeddings.
pub fn train_forecaster<T: Scalar>(
    ds: &Dataset,
    cfg: &ForecasterConfig,
) -> Result<(ForecasterModel<T>, ForecastTrainReport), ForecastError> {
    let windows = build_windows(ds, cfg)?;
    if windows.len() < 2 {
        return Err(ForecastError::InsufficientData(format!(
            "need at least 2 windows to split train/validation, got {}",
            windows.len()
        )));
    }
    let layout = layout_for(cfg, ds)?;
    let mut rng = RngStream::new(cfg.seed);

    // Users in dataset order; every one gets an embedding row.
    let mut user_ids = Vec::new();
    let mut user_index = HashMap::new();
    for series in ds.series() {
        user_index.insert(series.user_id().to_string(), user_ids.len());
        user_ids.push(series.user_id().to_string());
    }
    let emb_dim = cfg.user_emb_dim;
    let mut embeddings: Vec<T> = (0..user_ids.len() * emb_dim)
        .map(|_| real(rng.normal() * 0.1))
        .collect();

    let net = DenseNet::<T>::new(net_specs(&layout, cfg), &mut rng)?;
    let mut model = ForecasterModel {
        net,
        layout,
        config: cfg.clone(),
        user_index,
        user_ids,
        embeddings: embeddings.clone(),
        fallback_embedding: vec![T::zero(); emb_dim],
    };

    let mut order: Vec<usize> = (0..windows.len()).collect();
    rng.shuffle(&mut order);
    let n_val = (windows.len() / 10).max(1);
    let (train_idx, val_idx) = order.split_at(windows.len() - n_val);
    let train: Vec<&WindowSample> = train_idx.iter().map(|&i| &windows[i]).collect();
    let val: Vec<&WindowSample> = val_idx.iter().map(|&i| &windows[i]).collect();

    let net_count = model.net.param_count();
    let opt_cfg = OptimConfig::default()
        .with_lr(cfg.lr)
        .with_weight_decay(cfg.weight_decay);
    let mut opt = AdamW::<T>::new(net_count + embeddings.len(), opt_cfg);

    let mut best_val = model.mean_val_loss(&val)?;
    let mut best_params = (model.net.flatten_params(), embeddings.clone());
    let mut best_epoch = 0usize;
    let mut since_best = 0usize;
    let mut epochs_run = 0usize;

    let mut train_order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        rng.shuffle(&mut train_order);
        for batch in train_order.chunks(cfg.batch_size) {
            // Current mean embedding, fed to fallback-exposed samples.
            let mut mean_emb = vec![T::zero(); emb_dim];
            for row in 0..model.user_ids.len() {
                for k in 0..emb_dim {
                    mean_emb[k] += embeddings[row * emb_dim + k];
                }
            }
            for m in &mut mean_emb {
                *m = *m / real::<T>(model.user_ids.len().max(1) as f64);
            }
            let mut net_grads: Option<Gradients<T>> = None;
            let mut emb_grads = vec![T::zero(); embeddings.len()];
            for &sample_idx in batch {
                let s = train[sample_idx];
                let exposed =
                    cfg.fallback_exposure > 0.0 && rng.bernoulli(cfg.fallback_exposure);
                let mut input: Vec<T> = s.features.steps.iter().map(|&v| real(v)).collect();
                let row = model.user_index.get(&s.features.user_id).copied();
                match (exposed, row) {
                    (false, Some(r)) => {
                        input.extend_from_slice(&embeddings[r * emb_dim..(r + 1) * emb_dim])
                    }
                    _ => input.extend_from_slice(&mean_emb),
                }
                let (out, tape) = model.net.forward(&input, true, &mut rng)?;
                let loss_grad = mse_grad(&out, &model.target_of(s));
                let (grads, d_input) = model.net.backward(&tape, &loss_grad)?;
                match &mut net_grads {
                    None => net_grads = Some(grads),
                    Some(g) => g.add_assign(&grads),
                }
                // Embedding gradient is the input-gradient tail; exposed
                // samples train the net only.
                if !exposed {
                    if let Some(r) = row {
                        let tail = &d_input[d_input.len() - emb_dim..];
                        for (k, &g) in tail.iter().enumerate() {
                            emb_grads[r * emb_dim + k] += g;
                        }
                    }
                }
            }
            let mut net_grads = net_grads.expect("non-empty batch");
            let scale = real::<T>(1.0 / batch.len() as f64);
            net_grads.scale(scale);
            for g in &mut emb_grads {
                *g = *g * scale;
            }

            let mut params = model.net.flatten_params();
            params.extend_from_slice(&embeddings);
            let mut grads = net_grads.flatten();
            grads.extend_from_slice(&emb_grads);
            opt.step(&mut params, &grads);
            model.net.set_params(&params[..net_count])?;
            embeddings.copy_from_slice(&params[net_count..]);
            model.embeddings.copy_from_slice(&embeddings);
        }

        let val_loss = model.mean_val_loss(&val)?;
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params = (model.net.flatten_params(), embeddings.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    model.net.set_params(&best_params.0)?;
    model.embeddings = best_params.1;
    // Mean of trained embeddings backs unseen users.
    let n_users = model.user_ids.len().max(1);
    let mut fallback = vec![T::zero(); emb_dim];
    for row in 0..model.user_ids.len() {
        for k in 0..emb_dim {
            fallback[k] += model.embeddings[row * emb_dim + k];
        }
    }
    for f in &mut fallback {
        *f = *f / real::<T>(n_users as f64);
    }
    model.fallback_embedding = fallback;

    Ok((
        model,
        ForecastTrainReport {
            epochs_run,
            best_epoch,
            best_val_mse: best_val,
            n_train: train.len(),
            n_val: val.len(),
        },
    ))
}

pub const FORECASTER_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecasterDoc {
    pub format_version: u32,
    pub kind: String,
    pub config: ForecasterConfig,
    pub layout: InputLayout,
    pub net: NetDoc,
    pub embeddings: BTreeMap<String, Vec<f64>>,
    pub fallback_embedding: Vec<f64>,
}

impl<T: Scalar> ForecasterModel<T> {
    pub fn to_doc(&self) -> ForecasterDoc {
        let d = self.layout.user_emb_dim;
        let embeddings = self
            .user_ids
            .iter()
            .enumerate()
            .map(|(row, uid)| {
                let emb = self.embeddings[row * d..(row + 1) * d]
                    .iter()
                    .map(|&v| to_f64(v))
                    .collect();
                (uid.clone(), emb)
            })
            .collect();
        ForecasterDoc {
            format_version: FORECASTER_FORMAT_VERSION,
            kind: "forecaster".into(),
            config: self.config.clone(),
            layout: self.layout,
            net: net_to_doc(&self.net),
            embeddings,
            fallback_embedding: self.fallback_embedding.iter().map(|&v| to_f64(v)).collect(),
        }
    }

    pub fn from_doc(doc: &ForecasterDoc) -> Result<Self, ForecastError> {
        if doc.format_version != FORECASTER_FORMAT_VERSION {
            return Err(ForecastError::Persist(PersistError::UnsupportedVersion(
                doc.format_version,
            )));
        }
        let d = doc.layout.user_emb_dim;
        if doc.fallback_embedding.len() != d {
            return Err(ForecastError::LayoutMismatch("fallback embedding width".into()));
        }
        let mut user_ids = Vec::new();
        let mut user_index = HashMap::new();
        let mut embeddings = Vec::with_capacity(doc.embeddings.len() * d);
        for (uid, emb) in &doc.embeddings {
            if emb.len() != d {
                return Err(ForecastError::LayoutMismatch(format!(
                    "embedding width for `{uid}`"
                )));
            }
            user_index.insert(uid.clone(), user_ids.len());
            user_ids.push(uid.clone());
            embeddings.extend(emb.iter().map(|&v| real::<T>(v)));
        }
        Ok(Self {
            net: net_from_doc(&doc.net)?,
            layout: doc.layout,
            config: doc.config.clone(),
            user_index,
            user_ids,
            embeddings,
            fallback_embedding: doc.fallback_embedding.iter().map(|&v| real(v)).collect(),
        })
    }
}
