//! Finite-difference gradient verification for dense networks.

use super::loss::{mse, mse_grad};
use super::net::{DenseNet, NeuralError};
use super::rng::RngStream;
use crate::scalar::{real, to_f64, Scalar};

#[derive(Debug, Clone)]
pub struct GradientCheckReport {
    pub max_rel_error: f64,
    pub checked_params: usize,
    /// Flat index of the worst parameter.
    pub worst_index: usize,
}

/// Relative error with a floor: for components below the floor this bounds
/// the absolute error instead, which keeps near-zero gradients from being
/// dominated by finite-difference round-off.
pub(crate) fn rel_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compare `backward` against central finite differences of the MSE loss
/// in eval mode (dropout inactive, so the loss is deterministic).
///
/// `max_checked` caps how many parameters are probed; indices are spread
/// evenly over the flat parameter vector so every layer is covered.
pub fn gradient_check<T: Scalar>(
    net: &DenseNet<T>,
    input: &[T],
    target: &[T],
    epsilon: f64,
    max_checked: usize,
) -> Result<GradientCheckReport, NeuralError> {
    let mut rng = RngStream::new(0);
    let (out, tape) = net.forward(input, false, &mut rng)?;
    let loss_grad = mse_grad(&out, target);
    let (grads, _) = net.backward(&tape, &loss_grad)?;
    let analytic = grads.flatten();

    let mut probe = net.clone();
    let base = net.flatten_params();
    let n = base.len();
    let count = max_checked.min(n).max(1);
    let eps = real::<T>(epsilon);

    let mut max_rel = 0.0f64;
    let mut worst = 0usize;
    for k in 0..count {
        // Even spread over the parameter vector.
        let idx = if count == n { k } else { k * n / count };
        let mut params = base.clone();
        params[idx] = params[idx] + eps;
        probe.set_params(&params)?;
        let plus = to_f64(mse(&probe.infer(input)?, target));
        params[idx] = base[idx] - eps;
        probe.set_params(&params)?;
        let minus = to_f64(mse(&probe.infer(input)?, target));
        let numeric = (plus - minus) / (2.0 * epsilon);
        let rel = rel_error(to_f64(analytic[idx]), numeric, 1e-3);
        if rel > max_rel {
            max_rel = rel;
            worst = idx;
        }
    }
    Ok(GradientCheckReport { max_rel_error: max_rel, checked_params: count, worst_index: worst })
}

#[cfg(test)]
mod tests {
    use super::super::net::{Activation, LayerNormKind, LayerSpec};
    use super::*;

    fn random_vec(rng: &mut RngStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.normal()).collect()
    }

    #[test]
    fn plain_relu_net_passes() {
        for seed in 0..5 {
            let mut rng = RngStream::new(100 + seed);
            let specs = vec![LayerSpec::relu(6, 8), LayerSpec::linear(8, 3)];
            let net = DenseNet::<f64>::new(specs, &mut rng).unwrap();
            let x = random_vec(&mut rng, 6);
            let t = random_vec(&mut rng, 3);
            let report = gradient_check(&net, &x, &t, 1e-5, 200).unwrap();
            assert!(
                report.max_rel_error < 1e-6,
                "seed {seed}: rel error {}",
                report.max_rel_error
            );
        }
    }

    #[test]
    fn layer_norm_net_passes() {
        for seed in 0..5 {
            let mut rng = RngStream::new(200 + seed);
            let specs = vec![
                LayerSpec::relu(5, 12).with_layer_norm(LayerNormKind::Affine),
                LayerSpec::relu(12, 7).with_layer_norm(LayerNormKind::Plain),
                LayerSpec::linear(7, 2),
            ];
            let net = DenseNet::<f64>::new(specs, &mut rng).unwrap();
            let x = random_vec(&mut rng, 5);
            let t = random_vec(&mut rng, 2);
            let report = gradient_check(&net, &x, &t, 1e-5, 400).unwrap();
            assert!(
                report.max_rel_error < 1e-6,
                "seed {seed}: rel error {}",
                report.max_rel_error
            );
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = RngStream::new(31);
        let specs = vec![
            LayerSpec { in_dim: 4, out_dim: 6, activation: Activation::Relu, layer_norm: LayerNormKind::Affine, dropout: 0.0 },
            LayerSpec::linear(6, 2),
        ];
        let net = DenseNet::<f64>::new(specs, &mut rng).unwrap();
        let x = random_vec(&mut rng, 4);
        let t = random_vec(&mut rng, 2);
        let (out, tape) = net.forward(&x, false, &mut rng).unwrap();
        let (_, dx) = net.backward(&tape, &mse_grad(&out, &t)).unwrap();
        for i in 0..x.len() {
            let eps = 1e-6;
            let mut xp = x.clone();
            xp[i] += eps;
            let plus = mse(&net.infer(&xp).unwrap(), &t);
            xp[i] = x[i] - eps;
            let minus = mse(&net.infer(&xp).unwrap(), &t);
            let numeric = (plus - minus) / (2.0 * eps);
            assert!(rel_error(dx[i], numeric, 1e-3) < 1e-6);
        }
    }

    /// Train-mode pass with a cloned rng pins the dropout mask, so finite
    /// differences can exercise the dropout backward path too.
    #[test]
    fn dropout_backward_with_pinned_mask() {
        let mut init = RngStream::new(77);
        let specs = vec![
            LayerSpec::relu(5, 10).with_dropout(0.4),
            LayerSpec::linear(10, 2),
        ];
        let net = DenseNet::<f64>::new(specs, &mut init).unwrap();
        let x = random_vec(&mut init, 5);
        let t = random_vec(&mut init, 2);
        let mask_rng = RngStream::new(5150);

        let (out, tape) = net.forward(&x, true, &mut mask_rng.clone()).unwrap();
        assert!(tape.is_train_mode());
        let (grads, _) = net.backward(&tape, &mse_grad(&out, &t)).unwrap();
        let analytic = grads.flatten();

        let base = net.flatten_params();
        let mut probe = net.clone();
        for idx in (0..base.len()).step_by(7) {
            let eps = 1e-5;
            let mut params = base.clone();
            params[idx] += eps;
            probe.set_params(&params).unwrap();
            let (o, _) = probe.forward(&x, true, &mut mask_rng.clone()).unwrap();
            let plus = mse(&o, &t);
            params[idx] = base[idx] - eps;
            probe.set_params(&params).unwrap();
            let (o, _) = probe.forward(&x, true, &mut mask_rng.clone()).unwrap();
            let minus = mse(&o, &t);
            let numeric = (plus - minus) / (2.0 * eps);
            assert!(
                rel_error(analytic[idx], numeric, 1e-3) < 1e-6,
                "param {idx}: {} vs {numeric}",
                analytic[idx]
            );
        }
    }
}
