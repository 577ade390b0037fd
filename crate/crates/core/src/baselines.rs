//! L2-regularized ridge-regression baselines for next-step change:
//! previous score alone, or previous score plus a precomputed feature
//! vector. Closed-form normal equations on centered data; the intercept
//! is never penalized.

use crate::scalar::{real, Scalar};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RidgeError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty training data")]
    EmptyData,
    #[error("singular system: lambda = 0 on rank-deficient features")]
    SingularSystem,
    #[error("lambda must be non-negative, got {0}")]
    NegativeLambda(f64),
}

/// A fitted ridge regressor: `y = w . x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub lambda: T,
}

/// Solve the ridge normal equations `(Xc' Xc + lambda I) w = Xc' yc` on
/// centered data; the intercept comes from the means.
pub fn fit_ridge<T: Scalar>(
    x: &[Vec<T>],
    y: &[T],
    lambda: T,
) -> Result<RidgeModel<T>, RidgeError> {
    if lambda < T::zero() {
        return Err(RidgeError::NegativeLambda(crate::scalar::to_f64(lambda)));
    }
    if x.is_empty() || y.is_empty() {
        return Err(RidgeError::EmptyData);
    }
    if x.len() != y.len() {
        return Err(RidgeError::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x.len(),
            y.len()
        )));
    }
    let dim = x[0].len();
    if x.iter().any(|row| row.len() != dim) {
        return Err(RidgeError::DimensionMismatch("ragged feature rows".into()));
    }
    let n = real::<T>(x.len() as f64);

    let mut mean_x = vec![T::zero(); dim];
    for row in x {
        for (m, &v) in mean_x.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean_x {
        *m = *m / n;
    }
    let mean_y = y.iter().copied().sum::<T>() / n;

    // Gram matrix and moment vector of the centered data.
    let mut gram = vec![T::zero(); dim * dim];
    let mut xty = vec![T::zero(); dim];
    for (row, &yi) in x.iter().zip(y) {
        let yc = yi - mean_y;
        for i in 0..dim {
            let xi = row[i] - mean_x[i];
            xty[i] += xi * yc;
            for j in i..dim {
                gram[i * dim + j] += xi * (row[j] - mean_x[j]);
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            gram[i * dim + j] = gram[j * dim + i];
        }
        gram[i * dim + i] += lambda;
    }

    let weights = solve_symmetric(&mut gram, &mut xty, dim)?;
    let intercept = mean_y
        - weights
            .iter()
            .zip(&mean_x)
            .map(|(&w, &m)| w * m)
            .sum::<T>();
    Ok(RidgeModel { weights, intercept, lambda })
}

/// Gaussian elimination with partial pivoting; near-zero pivots signal a
/// singular system (possible only at lambda = 0).
fn solve_symmetric<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> Result<Vec<T>, RidgeError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = a
        .iter()
        .fold(T::zero(), |acc, &v| acc.max(v.abs()))
        .max(T::one());
    let tol = scale * real::<T>(1e-12);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row * n + col].abs() <= tol {
            return Err(RidgeError::SingularSystem);
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] = a[row * n + k] - factor * v;
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut out = vec![T::zero(); n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum = sum - a[col * n + k] * out[k];
        }
        out[col] = sum / a[col * n + col];
    }
    Ok(out)
}

impl<T: Scalar> RidgeModel<T> {
    pub fn predict(&self, x: &[T]) -> Result<T, RidgeError> {
        if x.len() != self.weights.len() {
            return Err(RidgeError::DimensionMismatch(format!(
                "{} features vs {} weights",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(x)
            .map(|(&w, &xi)| w * xi)
            .sum::<T>()
            + self.intercept)
    }
}

/// Per-feature standardization fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler<T> {
    pub means: Vec<T>,
    pub stds: Vec<T>,
}

impl<T: Scalar> StandardScaler<T> {
    pub fn fit(x: &[Vec<T>]) -> Result<Self, RidgeError> {
        if x.is_empty() {
            return Err(RidgeError::EmptyData);
        }
        let dim = x[0].len();
        let n = real::<T>(x.len() as f64);
        let mut means = vec![T::zero(); dim];
        for row in x {
            if row.len() != dim {
                return Err(RidgeError::DimensionMismatch("ragged feature rows".into()));
            }
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m = *m / n;
        }
        let mut vars = vec![T::zero(); dim];
        for row in x {
            for ((s, &v), &m) in vars.iter_mut().zip(row).zip(&means) {
                let d = v - m;
                *s += d * d;
            }
        }
        let stds = vars
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                // Constant features pass through unscaled.
                if s > T::zero() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn transform(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_unregularized() {
        let x: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0]];
        let y = vec![2.0, 4.0];
        let m = fit_ridge(&x, &y, 0.0).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-12);
        assert!(m.intercept.abs() < 1e-12);
        assert!((m.predict(&[3.0]).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn hand_derived_lambda_two() {
        let x: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0]];
        let y = vec![2.0, 4.0];
        let m = fit_ridge(&x, &y, 2.0).unwrap();
        assert!((m.weights[0] - 0.4).abs() < 1e-12);
        assert!((m.intercept - 2.4).abs() < 1e-12);
        assert!((m.predict(&[1.0]).unwrap() - 2.8).abs() < 1e-12);
    }

    #[test]
    fn constant_target_gives_zero_weights() {
        let x: Vec<Vec<f64>> = vec![vec![1.0, 0.5], vec![2.0, -0.5], vec![3.0, 0.25]];
        let y = vec![7.0, 7.0, 7.0];
        for lambda in [0.0, 1.0, 100.0] {
            let m = fit_ridge(&x, &y, lambda).unwrap();
            assert!(m.weights.iter().all(|w| w.abs() < 1e-10));
            assert!((m.intercept - 7.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_weight_model_predicts_intercept() {
        let m = RidgeModel::<f64> { weights: vec![0.0, 0.0], intercept: 1.5, lambda: 0.0 };
        assert_eq!(m.predict(&[9.0, -4.0]).unwrap(), 1.5);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn rank_deficient_without_regularization_is_singular() {
        // Two identical columns.
        let x: Vec<Vec<f64>> = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let y = vec![1.0, 2.0, 3.0];
        assert_eq!(fit_ridge(&x, &y, 0.0).unwrap_err(), RidgeError::SingularSystem);
        assert!(fit_ridge(&x, &y, 1e-3).is_ok());
    }

    #[test]
    fn large_lambda_shrinks_to_mean() {
        let x: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1.0, 4.0, 10.0];
        let m = fit_ridge(&x, &y, 1e9).unwrap();
        assert!(m.weights[0].abs() < 1e-6);
        let mean_y = 5.0;
        assert!((m.predict(&[2.0]).unwrap() - mean_y).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(
            fit_ridge::<f64>(&[], &[], 1.0).unwrap_err(),
            RidgeError::EmptyData
        );
        let x: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            fit_ridge(&x, &[1.0], 1.0).unwrap_err(),
            RidgeError::DimensionMismatch(_)
        ));
        assert!(matches!(
            fit_ridge(&x, &[1.0, 2.0], -1.0).unwrap_err(),
            RidgeError::NegativeLambda(_)
        ));
    }

    #[test]
    fn scaler_standardizes_and_passes_constants() {
        let x: Vec<Vec<f64>> = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let sc = StandardScaler::fit(&x).unwrap();
        let t0 = sc.transform(&x[0]);
        let t1 = sc.transform(&x[1]);
        assert!((t0[0] + 1.0).abs() < 1e-12);
        assert!((t1[0] - 1.0).abs() < 1e-12);
        assert_eq!(t0[1], 0.0);
        assert_eq!(t1[1], 0.0);
    }

    /// Reference gradient-descent minimizer of the ridge objective
    /// `||Xc w - yc||^2 + lambda ||w||^2` on centered data.
    pub(crate) fn ridge_gd(x: &[Vec<f64>], y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
        let n = x.len();
        let dim = x[0].len();
        let mean_x: Vec<f64> =
            (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let mean_y = y.iter().sum::<f64>() / n as f64;
        let xc: Vec<Vec<f64>> = x
            .iter()
            .map(|r| r.iter().zip(&mean_x).map(|(v, m)| v - m).collect())
            .collect();
        let yc: Vec<f64> = y.iter().map(|v| v - mean_y).collect();
        let mut w = vec![0.0; dim];
        // Lipschitz bound from the Gram diagonal keeps the step stable.
        let trace: f64 = xc.iter().flat_map(|r| r.iter().map(|v| v * v)).sum::<f64>() + lambda;
        let step = 0.49 / trace.max(1e-12);
        for _ in 0..200_000 {
            let mut grad = vec![0.0; dim];
            for (row, &yi) in xc.iter().zip(&yc) {
                let pred: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
                let err = pred - yi;
                for (g, &xi) in grad.iter_mut().zip(row) {
                    *g += 2.0 * err * xi;
                }
            }
            for (g, &wi) in grad.iter_mut().zip(&w) {
                *g += 2.0 * lambda * wi;
            }
            let max_g = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= step * g;
            }
            if max_g < 1e-10 {
                break;
            }
        }
        let intercept = mean_y - w.iter().zip(&mean_x).map(|(a, b)| a * b).sum::<f64>();
        (w, intercept)
    }

    #[test]
    fn closed_form_matches_gradient_descent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(5..30);
            let dim = rng.gen_range(1..4);
            let lambda = rng.gen_range(0.0..3.0f64);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let closed = fit_ridge(&x, &y, lambda).unwrap();
            let (w_gd, b_gd) = ridge_gd(&x, &y, lambda);
            for (a, b) in closed.weights.iter().zip(&w_gd) {
                assert!((a - b).abs() < 1e-6, "weights differ: {a} vs {b}");
            }
            assert!((closed.intercept - b_gd).abs() < 1e-6);
        }
    }
}
