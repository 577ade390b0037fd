//! Mean-squared-error loss for single samples; trainers average over
//! minibatches.

use crate::scalar::{real, Scalar};

/// Mean over output dimensions of the squared error.
pub fn mse<T: Scalar>(pred: &[T], target: &[T]) -> T {
    debug_assert_eq!(pred.len(), target.len());
    let n = real::<T>(pred.len() as f64);
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<T>()
        / n
}

/// Gradient of [`mse`] with respect to the prediction.
pub fn mse_grad<T: Scalar>(pred: &[T], target: &[T]) -> Vec<T> {
    debug_assert_eq!(pred.len(), target.len());
    let scale = real::<T>(2.0 / pred.len() as f64);
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| scale * (p - t))
        .collect()
}
