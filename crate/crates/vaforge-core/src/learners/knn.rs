//! k-nearest-neighbours classification.
//!
//! The model memorizes the training features and labels; prediction finds
//! the k nearest training rows by Euclidean distance (ties broken toward the
//! lower training index) and reports each class's share of the votes. With
//! k = 1 a training point's nearest neighbour is itself, so predictions on
//! the training set are one-hot at the true labels.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

use super::LearnerSpec;

/// A fitted k-nearest-neighbours model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel<F> {
    train: DenseMatrix<F>,
    labels: Vec<usize>,
    n_classes: usize,
    k: usize,
}

impl<F: Scalar> KnnModel<F> {
    /// The neighbourhood size in use (after clamping to the training size).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Row-stochastic vote fractions over the k nearest training rows.
    pub fn predict_proba(&self, x: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if x.cols() != self.train.cols() {
            return Err(Error::dim("knn features", self.train.cols(), x.cols()));
        }
        let mut out = DenseMatrix::zeros(x.rows(), self.n_classes);
        for i in 0..x.rows() {
            let xi = x.row(i);
            let mut dists: Vec<(F, usize)> = (0..self.train.rows())
                .map(|t| {
                    let d: F = self
                        .train
                        .row(t)
                        .iter()
                        .zip(xi.iter())
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum();
                    (d, t)
                })
                .collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let row = out.row_mut(i);
            let share = F::one() / F::c(self.k as f64);
            for &(_, t) in dists.iter().take(self.k) {
                row[self.labels[t]] += share;
            }
        }
        Ok(out)
    }
}

/// Builds the model from a spec (key `k`, clamped to the training size).
pub fn fit_knn<F: Scalar>(
    spec: &LearnerSpec,
    x: &DenseMatrix<F>,
    y: &[usize],
    n_classes: usize,
) -> Result<KnnModel<F>> {
    let k = spec.get_usize("k", 5)?.max(1).min(y.len());
    Ok(KnnModel {
        train: x.clone(),
        labels: y.to_vec(),
        n_classes,
        k,
    })
}
