//! Dense feed-forward networks with manual forward/backward passes.
//!
//! Layer order: affine transform, optional layer norm, activation,
//! dropout (train mode only, inverted scaling).

use super::rng::RngStream;
use crate::scalar::{real, Scalar};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tape does not match this network: {0}")]
    TapeMismatch(String),
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerNormKind {
    Off,
    /// Normalize only.
    Plain,
    /// Normalize plus learnable gain and bias.
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub layer_norm: LayerNormKind,
    pub dropout: f64,
}

impl LayerSpec {
    pub fn linear(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, activation: Activation::Linear, layer_norm: LayerNormKind::Off, dropout: 0.0 }
    }

    pub fn relu(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, activation: Activation::Relu, layer_norm: LayerNormKind::Off, dropout: 0.0 }
    }

    pub fn with_layer_norm(mut self, kind: LayerNormKind) -> Self {
        self.layer_norm = kind;
        self
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }
}

/// Variance floor keeping normalized outputs exact to ~1e-12 while the
/// backward pass stays smooth.
const LN_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct DenseLayer<T> {
    spec: LayerSpec,
    /// out_dim x in_dim, row-major.
    weight: Vec<T>,
    bias: Vec<T>,
    ln_gain: Vec<T>,
    ln_bias: Vec<T>,
}

/// Feed-forward network; parameter count and layout are fixed at
/// construction.
#[derive(Debug, Clone)]
pub struct DenseNet<T> {
    layers: Vec<DenseLayer<T>>,
}

/// Per-layer activation record produced by `forward`.
#[derive(Debug, Clone)]
struct LayerTape<T> {
    input: Vec<T>,
    /// Affine output (pre-norm).
    pre_norm: Vec<T>,
    /// Normalized values before affine (empty when no layer norm).
    xhat: Vec<T>,
    inv_std: T,
    /// Pre-activation values (after norm and affine).
    pre_act: Vec<T>,
    /// Dropout scale per unit (empty in eval mode or at rate 0).
    drop_scale: Vec<T>,
}

/// Activation tape from one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    layers: Vec<LayerTape<T>>,
    output: Vec<T>,
    train_mode: bool,
}

impl<T: Scalar> Tape<T> {
    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn is_train_mode(&self) -> bool {
        self.train_mode
    }
}

/// Parameter gradients mirroring the network layout.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    d_weight: Vec<Vec<T>>,
    d_bias: Vec<Vec<T>>,
    d_ln_gain: Vec<Vec<T>>,
    d_ln_bias: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(net: &DenseNet<T>) -> Self {
        Self {
            d_weight: net.layers.iter().map(|l| vec![T::zero(); l.weight.len()]).collect(),
            d_bias: net.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
            d_ln_gain: net.layers.iter().map(|l| vec![T::zero(); l.ln_gain.len()]).collect(),
            d_ln_bias: net.layers.iter().map(|l| vec![T::zero(); l.ln_bias.len()]).collect(),
        }
    }

    /// Accumulate another gradient (for minibatch sums).
    pub fn add_assign(&mut self, other: &Gradients<T>) {
        let add = |a: &mut Vec<Vec<T>>, b: &Vec<Vec<T>>| {
            for (av, bv) in a.iter_mut().zip(b) {
                for (x, &y) in av.iter_mut().zip(bv) {
                    *x += y;
                }
            }
        };
        add(&mut self.d_weight, &other.d_weight);
        add(&mut self.d_bias, &other.d_bias);
        add(&mut self.d_ln_gain, &other.d_ln_gain);
        add(&mut self.d_ln_bias, &other.d_ln_bias);
    }

    pub fn scale(&mut self, factor: T) {
        let sc = |a: &mut Vec<Vec<T>>| {
            for av in a.iter_mut() {
                for x in av.iter_mut() {
                    *x = *x * factor;
                }
            }
        };
        sc(&mut self.d_weight);
        sc(&mut self.d_bias);
        sc(&mut self.d_ln_gain);
        sc(&mut self.d_ln_bias);
    }

    /// Flatten in the same order as [`DenseNet::flatten_params`].
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for i in 0..self.d_weight.len() {
            out.extend_from_slice(&self.d_weight[i]);
            out.extend_from_slice(&self.d_bias[i]);
            out.extend_from_slice(&self.d_ln_gain[i]);
            out.extend_from_slice(&self.d_ln_bias[i]);
        }
        out
    }
}

impl<T: Scalar> DenseNet<T> {
    /// Build with seeded He/Xavier-style initialization: weights are
    /// normal with std sqrt(2/in) for ReLU layers and sqrt(1/in)
    /// otherwise; biases zero; layer-norm gain one, bias zero.
    pub fn new(specs: Vec<LayerSpec>, rng: &mut RngStream) -> Result<Self, NeuralError> {
        if specs.is_empty() {
            return Err(NeuralError::InvalidSpec("no layers".into()));
        }
        for w in specs.windows(2) {
            if w[0].out_dim != w[1].in_dim {
                return Err(NeuralError::InvalidSpec(format!(
                    "layer dims do not chain: {} -> {}",
                    w[0].out_dim, w[1].in_dim
                )));
            }
        }
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            if spec.in_dim == 0 || spec.out_dim == 0 {
                return Err(NeuralError::InvalidSpec("zero-width layer".into()));
            }
            if !(0.0..1.0).contains(&spec.dropout) {
                return Err(NeuralError::InvalidSpec(format!(
                    "dropout rate {} outside [0,1)",
                    spec.dropout
                )));
            }
            let std = match spec.activation {
                Activation::Relu => (2.0 / spec.in_dim as f64).sqrt(),
                Activation::Linear => (1.0 / spec.in_dim as f64).sqrt(),
            };
            let weight = (0..spec.in_dim * spec.out_dim)
                .map(|_| real::<T>(rng.normal() * std))
                .collect();
            let (ln_gain, ln_bias) = match spec.layer_norm {
                LayerNormKind::Affine => (vec![T::one(); spec.out_dim], vec![T::zero(); spec.out_dim]),
                _ => (Vec::new(), Vec::new()),
            };
            layers.push(DenseLayer {
                spec,
                weight,
                bias: vec![T::zero(); spec.out_dim],
                ln_gain,
                ln_bias,
            });
        }
        Ok(Self { layers })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().spec.out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len() + l.ln_gain.len() + l.ln_bias.len())
            .sum()
    }

    /// Row-major flat parameters: per layer weight, bias, then layer-norm
    /// gain and bias when present.
    pub fn flatten_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
            out.extend_from_slice(&l.ln_gain);
            out.extend_from_slice(&l.ln_bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[T]) -> Result<(), NeuralError> {
        if flat.len() != self.param_count() {
            return Err(NeuralError::DimensionMismatch(format!(
                "expected {} params, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            for dst in [&mut l.weight, &mut l.bias, &mut l.ln_gain, &mut l.ln_bias] {
                let len = dst.len();
                dst.copy_from_slice(&flat[at..at + len]);
                at += len;
            }
        }
        Ok(())
    }

    /// Forward pass returning the output and the tape `backward` needs.
    /// Dropout is active only in train mode, with inverted scaling so
    /// eval-mode expectations match.
    pub fn forward(
        &self,
        input: &[T],
        train_mode: bool,
        rng: &mut RngStream,
    ) -> Result<(Vec<T>, Tape<T>), NeuralError> {
        if input.len() != self.input_dim() {
            return Err(NeuralError::DimensionMismatch(format!(
                "input dim {} != first layer {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut x = input.to_vec();
        let mut tapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let spec = &layer.spec;
            let mut pre_norm = vec![T::zero(); spec.out_dim];
            for (o, pn) in pre_norm.iter_mut().enumerate() {
                let row = &layer.weight[o * spec.in_dim..(o + 1) * spec.in_dim];
                let mut acc = layer.bias[o];
                for (&w, &xi) in row.iter().zip(&x) {
                    acc += w * xi;
                }
                *pn = acc;
            }

            let (xhat, inv_std, pre_act) = match spec.layer_norm {
                LayerNormKind::Off => (Vec::new(), T::zero(), pre_norm.clone()),
                kind => {
                    let n = real::<T>(spec.out_dim as f64);
                    let mean = pre_norm.iter().copied().sum::<T>() / n;
                    let var = pre_norm
                        .iter()
                        .map(|&z| (z - mean) * (z - mean))
                        .sum::<T>()
                        / n;
                    let inv_std = (var + real::<T>(LN_EPS)).sqrt().recip();
                    let xhat: Vec<T> = pre_norm.iter().map(|&z| (z - mean) * inv_std).collect();
                    let pre_act = if kind == LayerNormKind::Affine {
                        xhat.iter()
                            .zip(layer.ln_gain.iter().zip(&layer.ln_bias))
                            .map(|(&h, (&g, &b))| g * h + b)
                            .collect()
                    } else {
                        xhat.clone()
                    };
                    (xhat, inv_std, pre_act)
                }
            };

            let mut out = match spec.activation {
                Activation::Linear => pre_act.clone(),
                Activation::Relu => pre_act.iter().map(|&z| z.max(T::zero())).collect(),
            };

            let drop_scale = if train_mode && spec.dropout > 0.0 {
                let keep = 1.0 - spec.dropout;
                let scales: Vec<T> = (0..spec.out_dim)
                    .map(|_| {
                        if rng.bernoulli(keep) {
                            real::<T>(1.0 / keep)
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                for (o, &s) in out.iter_mut().zip(&scales) {
                    *o = *o * s;
                }
                scales
            } else {
                Vec::new()
            };

            tapes.push(LayerTape {
                input: std::mem::take(&mut x),
                pre_norm,
                xhat,
                inv_std,
                pre_act,
                drop_scale,
            });
            x = out;
        }
        let tape = Tape { layers: tapes, output: x.clone(), train_mode };
        Ok((x, tape))
    }

    /// Eval-mode forward without tape bookkeeping.
    pub fn infer(&self, input: &[T]) -> Result<Vec<T>, NeuralError> {
        let mut rng = RngStream::new(0);
        Ok(self.forward(input, false, &mut rng)?.0)
    }

    /// Backpropagate `loss_grad` (dL/d output) through the tape, returning
    /// parameter gradients and the gradient with respect to the input.
    pub fn backward(
        &self,
        tape: &Tape<T>,
        loss_grad: &[T],
    ) -> Result<(Gradients<T>, Vec<T>), NeuralError> {
        if tape.layers.len() != self.layers.len() {
            return Err(NeuralError::TapeMismatch(format!(
                "tape has {} layers, net has {}",
                tape.layers.len(),
                self.layers.len()
            )));
        }
        if loss_grad.len() != self.output_dim() {
            return Err(NeuralError::TapeMismatch(format!(
                "loss grad dim {} != output dim {}",
                loss_grad.len(),
                self.output_dim()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut dy = loss_grad.to_vec();
        for (idx, (layer, lt)) in self.layers.iter().zip(&tape.layers).enumerate().rev() {
            let spec = &layer.spec;
            if lt.input.len() != spec.in_dim || lt.pre_norm.len() != spec.out_dim {
                return Err(NeuralError::TapeMismatch(format!("layer {idx} shape")));
            }

            if !lt.drop_scale.is_empty() {
                for (d, &s) in dy.iter_mut().zip(&lt.drop_scale) {
                    *d = *d * s;
                }
            }

            if spec.activation == Activation::Relu {
                for (d, &z) in dy.iter_mut().zip(&lt.pre_act) {
                    if z <= T::zero() {
                        *d = T::zero();
                    }
                }
            }

            let dz1: Vec<T> = match spec.layer_norm {
                LayerNormKind::Off => dy.clone(),
                kind => {
                    let dxhat: Vec<T> = if kind == LayerNormKind::Affine {
                        for ((gg, gb), (&d, &h)) in grads.d_ln_gain[idx]
                            .iter_mut()
                            .zip(grads.d_ln_bias[idx].iter_mut())
                            .zip(dy.iter().zip(&lt.xhat))
                        {
                            *gg += d * h;
                            *gb += d;
                        }
                        dy.iter().zip(&layer.ln_gain).map(|(&d, &g)| d * g).collect()
                    } else {
                        dy.clone()
                    };
                    let n = real::<T>(spec.out_dim as f64);
                    let mean_dxhat = dxhat.iter().copied().sum::<T>() / n;
                    let mean_dxhat_xhat = dxhat
                        .iter()
                        .zip(&lt.xhat)
                        .map(|(&d, &h)| d * h)
                        .sum::<T>()
                        / n;
                    dxhat
                        .iter()
                        .zip(&lt.xhat)
                        .map(|(&d, &h)| lt.inv_std * (d - mean_dxhat - h * mean_dxhat_xhat))
                        .collect()
                }
            };

            let mut dx = vec![T::zero(); spec.in_dim];
            for o in 0..spec.out_dim {
                let g = dz1[o];
                grads.d_bias[idx][o] += g;
                let row = &layer.weight[o * spec.in_dim..(o + 1) * spec.in_dim];
                let grow = &mut grads.d_weight[idx][o * spec.in_dim..(o + 1) * spec.in_dim];
                for i in 0..spec.in_dim {
                    grow[i] += g * lt.input[i];
                    dx[i] += row[i] * g;
                }
            }
            dy = dx;
        }
        Ok((grads, dy))
    }
}
