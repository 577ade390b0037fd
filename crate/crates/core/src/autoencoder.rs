//! Bottleneck autoencoder compressing 60-d indicator vectors into 10
//! binary latent bits for the MaxEnt model.
//!
//! Encoder 60 -> 32 -> 10, decoder mirrors it back to 60. Training
//! minimizes reconstruction MSE; the encoder output is squashed through a
//! sigmoid and thresholded to produce the latent bits.

use crate::clusters::{IndicatorVector, SEED_WORDS};
use crate::neural::{
    mse, mse_grad, net_from_doc, net_to_doc, AdamW, DenseNet, LayerSpec, NetDoc, NeuralError,
    OptimConfig, PersistError, RngStream,
};
use crate::scalar::{real, to_f64, Scalar};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Latent width produced by the encoder.
pub const LATENT_BITS: usize = 10;
const HIDDEN: usize = 32;

#[derive(Debug, Error)]
pub enum AeError {
    #[error("empty training data")]
    EmptyData,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub binarize_threshold: f64,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            max_epochs: 300,
            batch_size: 32,
            lr: 5e-4,
            weight_decay: 0.01,
            patience: 20,
            seed: 7,
            binarize_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AeModel<T> {
    encoder: DenseNet<T>,
    decoder: DenseNet<T>,
    binarize_threshold: T,
}

#[derive(Debug, Clone)]
pub struct AeTrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub initial_val_loss: f64,
    pub best_val_loss: f64,
}

fn encoder_specs() -> Vec<LayerSpec> {
    vec![LayerSpec::relu(SEED_WORDS, HIDDEN), LayerSpec::linear(HIDDEN, LATENT_BITS)]
}

fn decoder_specs() -> Vec<LayerSpec> {
    vec![LayerSpec::relu(LATENT_BITS, HIDDEN), LayerSpec::linear(HIDDEN, SEED_WORDS)]
}

impl<T: Scalar> AeModel<T> {
    /// Freshly initialized model (used by the trainer and by tests).
    pub fn init(threshold: f64, rng: &mut RngStream) -> Self {
        assert!(
            threshold > 0.0 && threshold < 1.0,
            "binarize threshold must lie strictly between 0 and 1"
        );
        Self {
            encoder: DenseNet::new(encoder_specs(), rng).expect("static specs are valid"),
            decoder: DenseNet::new(decoder_specs(), rng).expect("static specs are valid"),
            binarize_threshold: real(threshold),
        }
    }

    pub fn encoder(&self) -> &DenseNet<T> {
        &self.encoder
    }

    pub fn decoder(&self) -> &DenseNet<T> {
        &self.decoder
    }

    pub fn binarize_threshold(&self) -> T {
        self.binarize_threshold
    }

    /// Sigmoid of the encoder output thresholded into bits; ties round up.
    pub fn encode_binary(&self, x: &IndicatorVector) -> Result<Vec<u8>, AeError> {
        let input: Vec<T> = x.bits().iter().map(|&b| real(b as f64)).collect();
        let latent = self.encoder.infer(&input)?;
        Ok(latent
            .iter()
            .map(|&z| {
                let p = T::one() / (T::one() + (-z).exp());
                u8::from(p >= self.binarize_threshold)
            })
            .collect())
    }

    /// Reconstruction MSE of one indicator vector.
    pub fn reconstruction_loss(&self, x: &IndicatorVector) -> Result<T, AeError> {
        let input: Vec<T> = x.bits().iter().map(|&b| real(b as f64)).collect();
        let latent = self.encoder.infer(&input)?;
        let output = self.decoder.infer(&latent)?;
        Ok(mse(&output, &input))
    }

    fn mean_loss(&self, data: &[Vec<T>]) -> Result<T, AeError> {
        let mut total = T::zero();
        for x in data {
            let latent = self.encoder.infer(x)?;
            let output = self.decoder.infer(&latent)?;
            total += mse(&output, x);
        }
        Ok(total / real::<T>(data.len() as f64))
    }
}

/// Train on reconstruction alone and return the best-validation model.
///
/// The data is shuffled once with the config seed; the trailing tenth
/// (at least one sample when there are two or more) becomes the
/// validation split. With a single sample the training loss doubles as
/// the validation loss.
pub fn train_ae<T: Scalar>(
    data: &[IndicatorVector],
    cfg: &AeConfig,
) -> Result<(AeModel<T>, AeTrainReport), AeError> {
    if data.is_empty() {
        return Err(AeError::EmptyData);
    }
    let mut rng = RngStream::new(cfg.seed);
    let mut model = AeModel::<T>::init(cfg.binarize_threshold, &mut rng);

    let mut rows: Vec<Vec<T>> = data
        .iter()
        .map(|x| x.bits().iter().map(|&b| real(b as f64)).collect())
        .collect();
    rng.shuffle(&mut rows);
    let n_val = if rows.len() >= 2 { (rows.len() / 10).max(1) } else { 0 };
    let (train, val) = rows.split_at(rows.len() - n_val);
    let val: Vec<Vec<T>> = if val.is_empty() { train.to_vec() } else { val.to_vec() };

    let opt_cfg = OptimConfig::default()
        .with_lr(cfg.lr)
        .with_weight_decay(cfg.weight_decay);
    let enc_count = model.encoder.param_count();
    let dec_count = model.decoder.param_count();
    let mut opt = AdamW::<T>::new(enc_count + dec_count, opt_cfg);

    let mut best_val = to_f64(model.mean_loss(&val)?);
    let initial_val = best_val;
    let mut best_params = (model.encoder.flatten_params(), model.decoder.flatten_params());
    let mut best_epoch = 0usize;
    let mut since_best = 0usize;
    let mut epochs_run = 0usize;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad_acc: Option<(crate::neural::Gradients<T>, crate::neural::Gradients<T>)> =
                None;
            for &idx in batch {
                let x = &train[idx];
                let (latent, enc_tape) = model.encoder.forward(x, true, &mut rng)?;
                let (output, dec_tape) = model.decoder.forward(&latent, true, &mut rng)?;
                let loss_grad = mse_grad(&output, x);
                let (dec_grads, d_latent) = model.decoder.backward(&dec_tape, &loss_grad)?;
                let (enc_grads, _) = model.encoder.backward(&enc_tape, &d_latent)?;
                match &mut grad_acc {
                    None => grad_acc = Some((enc_grads, dec_grads)),
                    Some((e, d)) => {
                        e.add_assign(&enc_grads);
                        d.add_assign(&dec_grads);
                    }
                }
            }
            let (mut enc_grads, mut dec_grads) = grad_acc.expect("non-empty batch");
            let scale = real::<T>(1.0 / batch.len() as f64);
            enc_grads.scale(scale);
            dec_grads.scale(scale);

            let mut params = model.encoder.flatten_params();
            params.extend(model.decoder.flatten_params());
            let mut grads = enc_grads.flatten();
            grads.extend(dec_grads.flatten());
            opt.step(&mut params, &grads);
            model.encoder.set_params(&params[..enc_count])?;
            model.decoder.set_params(&params[enc_count..])?;
        }

        let val_loss = to_f64(model.mean_loss(&val)?);
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params = (model.encoder.flatten_params(), model.decoder.flatten_params());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    model.encoder.set_params(&best_params.0)?;
    model.decoder.set_params(&best_params.1)?;
    Ok((
        model,
        AeTrainReport {
            epochs_run,
            best_epoch,
            initial_val_loss: initial_val,
            best_val_loss: best_val,
        },
    ))
}

pub const AE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AeDoc {
    pub format_version: u32,
    pub kind: String,
    pub binarize_threshold: f64,
    pub encoder: NetDoc,
    pub decoder: NetDoc,
}

impl<T: Scalar> AeModel<T> {
    pub fn to_doc(&self) -> AeDoc {
        AeDoc {
            format_version: AE_FORMAT_VERSION,
            kind: "autoencoder".into(),
            binarize_threshold: to_f64(self.binarize_threshold),
            encoder: net_to_doc(&self.encoder),
            decoder: net_to_doc(&self.decoder),
        }
    }

    pub fn from_doc(doc: &AeDoc) -> Result<Self, AeError> {
        if doc.format_version != AE_FORMAT_VERSION {
            return Err(AeError::Persist(PersistError::UnsupportedVersion(doc.format_version)));
        }
        Ok(Self {
            encoder: net_from_doc(&doc.encoder)?,
            decoder: net_from_doc(&doc.decoder)?,
            binarize_threshold: real(doc.binarize_threshold),
        })
    }
}
