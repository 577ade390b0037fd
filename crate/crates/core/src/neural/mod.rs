//! Minimal neural substrate: dense layers with optional layer norm and
//! dropout, manual backpropagation, mean-squared-error loss, a
//! decoupled-weight-decay Adam optimizer, and a finite-difference
//! gradient checker. All of it is generic over the scalar type; training
//! at `f64` keeps the gradient checks tight.

mod check;
mod loss;
mod net;
mod optim;
mod persist;
mod rng;

pub use check::{gradient_check, GradientCheckReport};
pub use loss::{mse, mse_grad};
pub use net::{
    Activation, DenseNet, Gradients, LayerNormKind, LayerSpec, NeuralError, Tape,
};
pub use optim::{AdamW, OptimConfig};
pub use persist::{net_from_doc, net_to_doc, NetDoc, PersistError, FORMAT_VERSION};
pub use rng::RngStream;
