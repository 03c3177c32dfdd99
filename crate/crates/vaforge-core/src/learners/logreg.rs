//! Multinomial logistic regression.
//!
//! A single softmax layer trained by full-batch gradient descent on
//! L2-regularized cross-entropy. Parameters live in one flat vector —
//! weights in row-major class × feature order followed by per-class biases —
//! so the analytic gradient can be checked directly against finite
//! differences.
//!
//! Each descent step is accepted only if it does not increase the loss; the
//! step size is halved (deterministically) until it does not, which makes
//! the training loss monotonically nonincreasing by construction.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

use super::LearnerSpec;

/// Maximum step halvings per epoch before training stops early.
const MAX_HALVINGS: usize = 40;

/// Fills `out` with softmax(z) computed stably (max subtracted).
pub(crate) fn softmax_into<F: Scalar>(z: &[F], out: &mut [F]) {
    let max = z.iter().cloned().fold(F::neg_infinity(), F::max);
    let mut sum = F::zero();
    for (o, &v) in out.iter_mut().zip(z.iter()) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Splits a flat parameter vector into (class count, feature count).
fn infer_shape<F>(params: &[F], n_features: usize) -> Result<usize> {
    let stride = n_features + 1;
    if stride == 0 || params.len() % stride != 0 || params.is_empty() {
        return Err(Error::dim(
            "logreg parameters",
            format!("a multiple of {stride}"),
            params.len(),
        ));
    }
    Ok(params.len() / stride)
}

/// Per-row class scores z = Wx + b from flat parameters.
fn scores<F: Scalar>(params: &[F], x: &DenseMatrix<F>, n_classes: usize) -> DenseMatrix<F> {
    let d = x.cols();
    let mut z = DenseMatrix::zeros(x.rows(), n_classes);
    for i in 0..x.rows() {
        let xi = x.row(i);
        let zi = z.row_mut(i);
        for c in 0..n_classes {
            let w = &params[c * (d + 1)..c * (d + 1) + d];
            let mut acc = params[c * (d + 1) + d]; // bias
            for (wj, xj) in w.iter().zip(xi.iter()) {
                acc += *wj * *xj;
            }
            zi[c] = acc;
        }
    }
    z
}

/// L2-regularized mean cross-entropy of flat parameters on (x, y).
///
/// The regularizer covers every parameter, bias included. With zero rows the
/// data term is absent and the loss is the pure regularizer.
pub fn logreg_loss<F: Scalar>(params: &[F], x: &DenseMatrix<F>, y: &[usize], l2: F) -> Result<F> {
    let n_classes = infer_shape(params, x.cols())?;
    if y.len() != x.rows() {
        return Err(Error::Alignment(format!(
            "feature rows ({}) and labels ({}) disagree",
            x.rows(),
            y.len()
        )));
    }
    let mut loss = F::zero();
    if !y.is_empty() {
        let z = scores(params, x, n_classes);
        let mut p = vec![F::zero(); n_classes];
        for (i, &yi) in y.iter().enumerate() {
            softmax_into(z.row(i), &mut p);
            loss -= p[yi].max(F::c(1e-300)).ln();
        }
        loss /= F::c(y.len() as f64);
    }
    let reg: F = params.iter().map(|&v| v * v).sum();
    Ok(loss + l2 * reg)
}

/// Analytic gradient of [`logreg_loss`] with respect to the flat parameters.
///
/// With zero rows the gradient is the pure regularizer `2·l2·params`.
pub fn logreg_gradient<F: Scalar>(
    params: &[F],
    x: &DenseMatrix<F>,
    y: &[usize],
    l2: F,
) -> Result<Vec<F>> {
    let n_classes = infer_shape(params, x.cols())?;
    if y.len() != x.rows() {
        return Err(Error::Alignment(format!(
            "feature rows ({}) and labels ({}) disagree",
            x.rows(),
            y.len()
        )));
    }
    let d = x.cols();
    let mut grad = vec![F::zero(); params.len()];
    if !y.is_empty() {
        let z = scores(params, x, n_classes);
        let inv_n = F::one() / F::c(y.len() as f64);
        let mut p = vec![F::zero(); n_classes];
        for (i, &yi) in y.iter().enumerate() {
            softmax_into(z.row(i), &mut p);
            let xi = x.row(i);
            for c in 0..n_classes {
                let mut dz = p[c] * inv_n;
                if c == yi {
                    dz -= inv_n;
                }
                let base = c * (d + 1);
                for (j, &xj) in xi.iter().enumerate() {
                    grad[base + j] += dz * xj;
                }
                grad[base + d] += dz;
            }
        }
    }
    for (g, &v) in grad.iter_mut().zip(params.iter()) {
        *g += F::c(2.0) * l2 * v;
    }
    Ok(grad)
}

/// A fitted multinomial logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregModel<F> {
    params: Vec<F>,
    n_features: usize,
    n_classes: usize,
    l2: F,
    /// Training loss after each accepted epoch (monotone nonincreasing).
    loss_curve: Vec<F>,
}

impl<F: Scalar> LogregModel<F> {
    /// The flat parameter vector (weights row-major, then biases).
    pub fn params(&self) -> &[F] {
        &self.params
    }

    /// Training loss after initialization and each epoch.
    pub fn loss_curve(&self) -> &[F] {
        &self.loss_curve
    }

    /// Row-stochastic class probabilities for each row of `x`.
    pub fn predict_proba(&self, x: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if x.cols() != self.n_features {
            return Err(Error::dim("logreg features", self.n_features, x.cols()));
        }
        let z = scores(&self.params, x, self.n_classes);
        let mut out = DenseMatrix::zeros(x.rows(), self.n_classes);
        for i in 0..x.rows() {
            softmax_into(z.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

/// Trains logistic regression from a spec (keys `lr`, `epochs`, `l2`).
///
/// Parameters start at zero, so training is deterministic and independent of
/// the seed. Each epoch takes the largest step in {lr, lr/2, …} that does
/// not increase the loss; if none exists the model has converged and
/// training stops.
pub fn fit_logreg<F: Scalar>(
    spec: &LearnerSpec,
    x: &DenseMatrix<F>,
    y: &[usize],
    n_classes: usize,
) -> Result<LogregModel<F>> {
    let lr = F::c(spec.get_f64("lr", 0.5)?);
    let epochs = spec.get_usize("epochs", 200)?;
    let l2 = F::c(spec.get_f64("l2", 1e-4)?);
    let d = x.cols();
    let mut params = vec![F::zero(); n_classes * (d + 1)];
    let mut loss = logreg_loss(&params, x, y, l2)?;
    let mut loss_curve = vec![loss];
    for _ in 0..epochs {
        let grad = logreg_gradient(&params, x, y, l2)?;
        let mut step = lr;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<F> = params
                .iter()
                .zip(grad.iter())
                .map(|(&p, &g)| p - step * g)
                .collect();
            let trial_loss = logreg_loss(&trial, x, y, l2)?;
            if trial_loss <= loss {
                accepted = Some((trial, trial_loss));
                break;
            }
            step /= F::c(2.0);
        }
        match accepted {
            Some((trial, trial_loss)) => {
                params = trial;
                loss = trial_loss;
                loss_curve.push(loss);
            }
            None => break,
        }
    }
    Ok(LogregModel {
        params,
        n_features: d,
        n_classes,
        l2,
        loss_curve,
    })
}
