//! One-vs-rest gradient-boosted regression trees.
//!
//! Each class gets its own boosted ensemble on binary log-loss: scores start
//! at the class's prior log-odds, every round fits a depth-limited
//! regression tree to the current residuals with exact split search over
//! unique feature values, and leaf values take a Newton step (residual sum
//! over hessian sum, clipped) scaled by the learning rate. Class
//! probabilities are the per-class sigmoids normalized to sum to one, so a
//! model with zero trees predicts the training class frequencies.
//!
//! Splits with zero variance reduction are still taken when a valid
//! threshold exists — a parity pattern has no informative first split, yet
//! a depth-2 tree must be able to carve it.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

use super::LearnerSpec;

/// Newton leaf values are clipped to this magnitude.
const LEAF_CLIP: f64 = 4.0;

/// Numerically stable logistic function.
fn sigmoid<F: Scalar>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// A node in a regression tree; children are indices into the node list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode<F> {
    Leaf { value: F },
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
}

/// A regression tree stored as a node list with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree<F> {
    nodes: Vec<TreeNode<F>>,
}

impl<F: Scalar> RegTree<F> {
    /// The tree's prediction for one feature row.
    pub fn predict_row(&self, row: &[F]) -> F {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

struct TreeBuilder<'a, F> {
    x: &'a DenseMatrix<F>,
    grad: &'a [F],
    hess: &'a [F],
    max_depth: usize,
    min_samples_leaf: usize,
    nodes: Vec<TreeNode<F>>,
}

impl<F: Scalar> TreeBuilder<'_, F> {
    fn leaf_value(&self, indices: &[usize]) -> F {
        let g: F = indices.iter().map(|&i| self.grad[i]).sum();
        let h: F = indices.iter().map(|&i| self.hess[i]).sum();
        let value = g / h.max(F::c(1e-12));
        value.max(F::c(-LEAF_CLIP)).min(F::c(LEAF_CLIP))
    }

    /// Exact search over every feature and every boundary between distinct
    /// sorted values. The best variance-reduction gain wins; ties keep the
    /// first candidate in (feature, threshold) scan order.
    fn best_split(&self, indices: &[usize]) -> Option<(usize, F)> {
        let n = indices.len();
        if n < 2 * self.min_samples_leaf.max(1) {
            return None;
        }
        let total: F = indices.iter().map(|&i| self.grad[i]).sum();
        let n_f = F::c(n as f64);
        let mut best: Option<(usize, F)> = None;
        let mut best_gain = F::neg_infinity();
        for feature in 0..self.x.cols() {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.x
                    .get(a, feature)
                    .partial_cmp(&self.x.get(b, feature))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut left_sum = F::zero();
            for s in 1..n {
                left_sum += self.grad[order[s - 1]];
                let v_prev = self.x.get(order[s - 1], feature);
                let v_next = self.x.get(order[s], feature);
                if !(v_prev < v_next) {
                    continue;
                }
                if s < self.min_samples_leaf || n - s < self.min_samples_leaf {
                    continue;
                }
                let nl = F::c(s as f64);
                let nr = F::c((n - s) as f64);
                let right_sum = total - left_sum;
                let gain =
                    left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / n_f;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((feature, (v_prev + v_next) / F::c(2.0)));
                }
            }
        }
        best
    }

    fn build(&mut self, indices: &[usize], depth: usize) -> usize {
        let first = self.grad[indices[0]];
        let pure = indices.iter().all(|&i| self.grad[i] == first);
        let split = if depth < self.max_depth && !pure {
            self.best_split(indices)
        } else {
            None
        };
        match split {
            None => {
                let id = self.nodes.len();
                self.nodes.push(TreeNode::Leaf {
                    value: self.leaf_value(indices),
                });
                id
            }
            Some((feature, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| self.x.get(i, feature) <= threshold);
                let id = self.nodes.len();
                // Placeholder replaced once children are numbered.
                self.nodes.push(TreeNode::Leaf { value: F::zero() });
                let left = self.build(&left_idx, depth + 1);
                let right = self.build(&right_idx, depth + 1);
                self.nodes[id] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                id
            }
        }
    }
}

fn fit_tree<F: Scalar>(
    x: &DenseMatrix<F>,
    grad: &[F],
    hess: &[F],
    max_depth: usize,
    min_samples_leaf: usize,
) -> RegTree<F> {
    let mut builder = TreeBuilder {
        x,
        grad,
        hess,
        max_depth,
        min_samples_leaf: min_samples_leaf.max(1),
        nodes: Vec::new(),
    };
    let indices: Vec<usize> = (0..x.rows()).collect();
    builder.build(&indices, 0);
    RegTree {
        nodes: builder.nodes,
    }
}

/// A fitted one-vs-rest boosted-tree classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel<F> {
    n_features: usize,
    n_classes: usize,
    /// Prior log-odds per class.
    priors: Vec<F>,
    /// Trees indexed `[class][round]`.
    trees: Vec<Vec<RegTree<F>>>,
    learning_rate: F,
    /// Summed binary log-loss after initialization and each round.
    loss_curve: Vec<F>,
}

impl<F: Scalar> GbdtModel<F> {
    /// Training loss after initialization and each boosting round.
    pub fn loss_curve(&self) -> &[F] {
        &self.loss_curve
    }

    /// Number of boosting rounds per class.
    pub fn n_rounds(&self) -> usize {
        self.trees.first().map_or(0, Vec::len)
    }

    /// Raw additive score for one class over each row of `x`.
    fn class_scores(&self, x: &DenseMatrix<F>, class: usize) -> Vec<F> {
        (0..x.rows())
            .map(|i| {
                let mut score = self.priors[class];
                for tree in &self.trees[class] {
                    score += self.learning_rate * tree.predict_row(x.row(i));
                }
                score
            })
            .collect()
    }

    /// Row-stochastic class probabilities: per-class sigmoids, normalized.
    pub fn predict_proba(&self, x: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if x.cols() != self.n_features {
            return Err(Error::dim("gbdt features", self.n_features, x.cols()));
        }
        let mut out = DenseMatrix::zeros(x.rows(), self.n_classes);
        for c in 0..self.n_classes {
            for (i, s) in self.class_scores(x, c).into_iter().enumerate() {
                out.set(i, c, sigmoid(s));
            }
        }
        for i in 0..x.rows() {
            let row = out.row_mut(i);
            let sum: F = row.iter().copied().sum();
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(out)
    }
}

/// Mean summed binary log-loss of current scores against one-vs-rest labels.
fn ovr_log_loss<F: Scalar>(scores: &[Vec<F>], y: &[usize]) -> F {
    let mut loss = F::zero();
    for (c, class_scores) in scores.iter().enumerate() {
        for (i, &s) in class_scores.iter().enumerate() {
            let p = sigmoid(s).max(F::c(1e-15)).min(F::c(1.0 - 1e-15));
            loss -= if y[i] == c {
                p.ln()
            } else {
                (F::one() - p).ln()
            };
        }
    }
    loss / F::c(y.len() as f64)
}

/// Trains the boosted ensemble from a spec (keys `n_estimators`,
/// `learning_rate`, `max_depth`, `min_samples_leaf`).
pub fn fit_gbdt<F: Scalar>(
    spec: &LearnerSpec,
    x: &DenseMatrix<F>,
    y: &[usize],
    n_classes: usize,
) -> Result<GbdtModel<F>> {
    let n_estimators = spec.get_usize("n_estimators", 50)?;
    let learning_rate = F::c(spec.get_f64("learning_rate", 0.1)?);
    let max_depth = spec.get_usize("max_depth", 3)?;
    let min_samples_leaf = spec.get_usize("min_samples_leaf", 1)?;

    let n = y.len();
    let mut priors = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let count = y.iter().filter(|&&yi| yi == c).count();
        let p = count as f64 / n as f64;
        priors.push(F::c((p / (1.0 - p)).ln()));
    }

    let mut scores: Vec<Vec<F>> = priors.iter().map(|&p| vec![p; n]).collect();
    let mut trees: Vec<Vec<RegTree<F>>> = vec![Vec::new(); n_classes];
    let mut loss_curve = vec![ovr_log_loss(&scores, y)];
    for _ in 0..n_estimators {
        for c in 0..n_classes {
            let mut grad = Vec::with_capacity(n);
            let mut hess = Vec::with_capacity(n);
            for (i, &s) in scores[c].iter().enumerate() {
                let p = sigmoid(s);
                let target = if y[i] == c { F::one() } else { F::zero() };
                grad.push(target - p);
                hess.push(p * (F::one() - p));
            }
            let tree = fit_tree(x, &grad, &hess, max_depth, min_samples_leaf);
            for i in 0..n {
                scores[c][i] += learning_rate * tree.predict_row(x.row(i));
            }
            trees[c].push(tree);
        }
        loss_curve.push(ovr_log_loss(&scores, y));
    }
    Ok(GbdtModel {
        n_features: x.cols(),
        n_classes,
        priors,
        trees,
        learning_rate,
        loss_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::argmax;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xor_data() -> (DenseMatrix<f64>, Vec<usize>) {
        let x = DenseMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        (x, vec![0, 1, 1, 0])
    }

    #[test]
    fn zero_estimators_predict_class_frequencies() {
        let x = DenseMatrix::<f64>::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]])
            .unwrap();
        let y = vec![0, 0, 0, 1];
        let spec =
            LearnerSpec::new(super::super::LearnerKind::Gbdt, 0).with_int("n_estimators", 0);
        let model = fit_gbdt(&spec, &x, &y, 2).unwrap();
        let p = model.predict_proba(&x).unwrap();
        for i in 0..4 {
            assert!((p.get(i, 0) - 0.75).abs() < 1e-12);
            assert!((p.get(i, 1) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn xor_is_learned_exactly_at_depth_two() {
        let (x, y) = xor_data();
        let spec = LearnerSpec::new(super::super::LearnerKind::Gbdt, 0)
            .with_int("n_estimators", 50)
            .with_int("max_depth", 2)
            .with_f64("learning_rate", 0.5);
        let model = fit_gbdt(&spec, &x, &y, 2).unwrap();
        let p = model.predict_proba(&x).unwrap();
        for (i, &yi) in y.iter().enumerate() {
            assert_eq!(argmax(p.row(i)), yi, "row {i} misclassified");
        }
    }

    #[test]
    fn training_loss_is_monotone_per_round() {
        let (x, y) = xor_data();
        let spec = LearnerSpec::new(super::super::LearnerKind::Gbdt, 0)
            .with_int("n_estimators", 50)
            .with_int("max_depth", 2)
            .with_f64("learning_rate", 0.1);
        let model = fit_gbdt(&spec, &x, &y, 2).unwrap();
        assert_eq!(model.loss_curve().len(), 51);
        for pair in model.loss_curve().windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn min_samples_leaf_blocks_small_splits() {
        let (x, y) = xor_data();
        // Each side of any split has 2 rows; min_samples_leaf=3 forbids all
        // splits, so every tree is a stump and XOR stays unlearned.
        let spec = LearnerSpec::new(super::super::LearnerKind::Gbdt, 0)
            .with_int("n_estimators", 10)
            .with_int("max_depth", 2)
            .with_int("min_samples_leaf", 3);
        let model = fit_gbdt(&spec, &x, &y, 2).unwrap();
        let p = model.predict_proba(&x).unwrap();
        for i in 1..4 {
            assert!((p.get(i, 0) - p.get(0, 0)).abs() < 1e-12, "rows differ");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<usize> = (0..20).map(|_| rng.random_range(0..3)).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let spec =
            LearnerSpec::new(super::super::LearnerKind::Gbdt, 0).with_int("n_estimators", 10);
        let a = fit_gbdt(&spec, &x, &y, 3).unwrap();
        let b = fit_gbdt(&spec, &x, &y, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permuting_training_rows_leaves_predictions_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<usize> = (0..15).map(|i| i % 3).collect();
        let spec = LearnerSpec::new(super::super::LearnerKind::Gbdt, 0)
            .with_int("n_estimators", 8)
            .with_int("max_depth", 2);

        let x = DenseMatrix::from_rows(&rows).unwrap();
        let direct = fit_gbdt(&spec, &x, &y, 3).unwrap();

        let perm: Vec<usize> = vec![7, 2, 14, 0, 9, 4, 11, 1, 13, 5, 10, 3, 12, 6, 8];
        let rows_p: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let y_p: Vec<usize> = perm.iter().map(|&i| y[i]).collect();
        let xp = DenseMatrix::from_rows(&rows_p).unwrap();
        let permuted = fit_gbdt(&spec, &xp, &y_p, 3).unwrap();

        let probe = DenseMatrix::from_rows(&[vec![0.1, -0.2], vec![-0.8, 0.9]]).unwrap();
        let pa = direct.predict_proba(&probe).unwrap();
        let pb = permuted.predict_proba(&probe).unwrap();
        for (a, b) in pa.data().iter().zip(pb.data().iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
