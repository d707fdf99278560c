//! Multinomial logistic regression with mini-batch SGD: the desk-scale
//! stand-in for the heavyweight detection models. Convex, closed-form
//! gradient, and cheap enough to run hundreds of federated rounds in tests.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::scenario::Dataset;

/// Weights are `classes x (features + 1)`; the trailing column is the bias,
/// applied to an implicit constant-1 feature.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Array2<f64>,
}

impl LogisticModel {
    pub fn zeros(classes: usize, feature_dim: usize) -> Self {
        LogisticModel {
            weights: Array2::zeros((classes, feature_dim + 1)),
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.ncols() - 1
    }

    pub fn from_flat(flat: &[f64], classes: usize, feature_dim: usize) -> Result<Self> {
        let expected = classes * (feature_dim + 1);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "flat model has {} weights, {classes} classes x {} columns needs {expected}",
                flat.len(),
                feature_dim + 1
            )));
        }
        Ok(LogisticModel {
            weights: Array2::from_shape_vec((classes, feature_dim + 1), flat.to_vec())
                .expect("shape checked above"),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.weights.iter().copied().collect()
    }

    /// Class scores for one sample (bias folded in).
    fn logits(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let c = self.classes();
        let f = self.feature_dim();
        let mut out = Array1::zeros(c);
        for k in 0..c {
            let row = self.weights.row(k);
            let mut acc = row[f]; // bias
            for j in 0..f {
                acc += row[j] * x[j];
            }
            out[k] = acc;
        }
        out
    }

    fn softmax(mut logits: Array1<f64>) -> Array1<f64> {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        logits.mapv_inplace(|v| (v - max).exp());
        let sum = logits.sum();
        logits.mapv_inplace(|v| v / sum);
        logits
    }

    pub fn predict(&self, features: &Array2<f64>) -> Vec<usize> {
        features
            .rows()
            .into_iter()
            .map(|x| {
                let logits = self.logits(x);
                logits
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Mean cross-entropy over a dataset.
    pub fn loss(&self, data: &Dataset) -> f64 {
        let mut total = 0.0;
        for (x, &y) in data.features.rows().into_iter().zip(&data.labels) {
            let p = Self::softmax(self.logits(x));
            total -= p[y].max(1e-300).ln();
        }
        total / data.len() as f64
    }

    /// Mean gradient of the cross-entropy over the given sample indices:
    /// per sample, `(softmax(Wx) - onehot(y)) (outer) x`.
    pub fn batch_gradient(&self, data: &Dataset, batch: &[usize]) -> Array2<f64> {
        let c = self.classes();
        let f = self.feature_dim();
        let mut grad = Array2::zeros((c, f + 1));
        for &i in batch {
            let x = data.features.row(i);
            let y = data.labels[i];
            let mut p = Self::softmax(self.logits(x));
            p[y] -= 1.0;
            for k in 0..c {
                let scale = p[k];
                for j in 0..f {
                    grad[(k, j)] += scale * x[j];
                }
                grad[(k, f)] += scale; // bias column
            }
        }
        grad / batch.len() as f64
    }

    /// One SGD step: `w -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &Array2<f64>, lr: f64) {
        self.weights.scaled_add(-lr, grad);
    }

    /// Run `epochs` passes of mini-batch SGD with a seeded shuffle.
    pub fn sgd_epochs<R: RngCore>(
        &mut self,
        data: &Dataset,
        epochs: u32,
        lr: f64,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<()> {
        if data.is_empty() {
            return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
        }
        if data.feature_dim() != self.feature_dim() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, data has {}",
                self.feature_dim(),
                data.feature_dim()
            )));
        }
        let batch_size = batch_size.max(1);
        let mut indices: Vec<usize> = (0..data.len()).collect();
        for _ in 0..epochs {
            indices.shuffle(rng);
            for batch in indices.chunks(batch_size) {
                let grad = self.batch_gradient(data, batch);
                self.apply_gradient(&grad, lr);
            }
        }
        if self.weights.iter().any(|w| !w.is_finite()) || !self.loss(data).is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn separable_data() -> Dataset {
        // Two well-separated 2-d blobs.
        Dataset {
            features: array![
                [2.0, 2.1],
                [2.2, 1.9],
                [1.8, 2.0],
                [-2.0, -2.1],
                [-2.2, -1.9],
                [-1.8, -2.0]
            ],
            labels: vec![0, 0, 0, 1, 1, 1],
        }
    }

    #[test]
    fn zero_learning_rate_leaves_weights_bit_identical() {
        let data = separable_data();
        let mut model = LogisticModel::zeros(2, 2);
        let before = model.to_flat();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        model.sgd_epochs(&data, 5, 0.0, 2, &mut rng).unwrap();
        assert_eq!(model.to_flat(), before);
    }

    #[test]
    fn loss_decreases_across_epochs_on_separable_data() {
        let data = separable_data();
        let mut model = LogisticModel::zeros(2, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut losses = vec![model.loss(&data)];
        for _ in 0..5 {
            model.sgd_epochs(&data, 1, 0.5, 3, &mut rng).unwrap();
            losses.push(model.loss(&data));
        }
        for pair in losses.windows(2) {
            assert!(pair[1] < pair[0] + 1e-12, "loss went up: {losses:?}");
        }
        assert_eq!(model.predict(&data.features), data.labels);
    }

    #[test]
    fn single_step_matches_finite_difference_gradient() {
        let data = Dataset {
            features: array![[0.7, -1.3]],
            labels: vec![1],
        };
        let mut model = LogisticModel::from_flat(
            &[0.1, -0.2, 0.05, -0.3, 0.4, 0.15],
            2,
            2,
        )
        .unwrap();

        // Finite-difference oracle over every weight.
        let eps = 1e-6;
        let base = model.clone();
        let mut fd = Array2::zeros((2, 3));
        for k in 0..2 {
            for j in 0..3 {
                let mut plus = base.clone();
                plus.weights[(k, j)] += eps;
                let mut minus = base.clone();
                minus.weights[(k, j)] -= eps;
                fd[(k, j)] = (plus.loss(&data) - minus.loss(&data)) / (2.0 * eps);
            }
        }
        let analytic = base.batch_gradient(&data, &[0]);
        for (a, b) in analytic.iter().zip(fd.iter()) {
            assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{a} vs {b}");
        }

        // One step at lr = 1 is exactly w - grad.
        model.apply_gradient(&analytic, 1.0);
        for ((w, w0), g) in model.weights.iter().zip(base.weights.iter()).zip(analytic.iter()) {
            assert!((w - (w0 - g)).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_round_trip_and_shape_checks() {
        let model = LogisticModel::zeros(3, 4);
        let flat = model.to_flat();
        assert_eq!(flat.len(), 15);
        assert_eq!(LogisticModel::from_flat(&flat, 3, 4).unwrap(), model);
        assert!(LogisticModel::from_flat(&flat, 3, 5).is_err());
    }

    #[test]
    fn divergent_learning_rate_reports_non_finite_loss() {
        let data = separable_data();
        let mut model = LogisticModel::zeros(2, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let result = model.sgd_epochs(&data, 50, 1e308, 2, &mut rng);
        assert!(matches!(result, Err(Error::NonFiniteLoss)));
    }
}
