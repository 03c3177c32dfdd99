//! One-hidden-layer multilayer perceptron.
//!
//! Architecture: dense hidden layer with tanh or relu activation, then a
//! softmax output. All parameters live in one flat vector (W1, b1, W2, b2 in
//! that order) so the backpropagated gradient can be checked against finite
//! differences, layer by layer.
//!
//! Training mirrors the logistic-regression routine: seeded initialization,
//! full-batch gradient descent, and per-epoch deterministic step halving so
//! the training loss never increases.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logreg::softmax_into;
use super::LearnerSpec;

/// Maximum step halvings per epoch before training stops early.
const MAX_HALVINGS: usize = 40;

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn parse(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Schema(format!(
                "activation must be \"tanh\" or \"relu\", got {other:?}"
            ))),
        }
    }

    fn apply<F: Scalar>(self, v: F) -> F {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(F::zero()),
        }
    }

    /// Derivative expressed in terms of the pre-activation value.
    fn derivative<F: Scalar>(self, v: F) -> F {
        match self {
            Activation::Tanh => {
                let t = v.tanh();
                F::one() - t * t
            }
            Activation::Relu => {
                if v > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
        }
    }
}

/// The network's layer sizes and activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub n_features: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub activation: Activation,
}

impl MlpShape {
    /// Total flat parameter count: W1, b1, W2, b2.
    pub fn n_params(&self) -> usize {
        self.hidden * self.n_features + self.hidden + self.n_classes * self.hidden + self.n_classes
    }

    /// Offsets of (w1, b1, w2, b2) in the flat vector.
    fn offsets(&self) -> (usize, usize, usize, usize) {
        let w1 = 0;
        let b1 = w1 + self.hidden * self.n_features;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.n_classes * self.hidden;
        (w1, b1, w2, b2)
    }
}

/// One forward pass for a single row; fills hidden pre-activations,
/// activations, and output probabilities.
fn forward_row<F: Scalar>(
    shape: &MlpShape,
    params: &[F],
    xi: &[F],
    z1: &mut [F],
    h: &mut [F],
    p: &mut [F],
) {
    let (w1, b1, w2, b2) = shape.offsets();
    for j in 0..shape.hidden {
        let mut acc = params[b1 + j];
        let row = &params[w1 + j * shape.n_features..w1 + (j + 1) * shape.n_features];
        for (w, x) in row.iter().zip(xi.iter()) {
            acc += *w * *x;
        }
        z1[j] = acc;
        h[j] = shape.activation.apply(acc);
    }
    let mut z2 = vec![F::zero(); shape.n_classes];
    for c in 0..shape.n_classes {
        let mut acc = params[b2 + c];
        let row = &params[w2 + c * shape.hidden..w2 + (c + 1) * shape.hidden];
        for (w, hj) in row.iter().zip(h.iter()) {
            acc += *w * *hj;
        }
        z2[c] = acc;
    }
    softmax_into(&z2, p);
}

fn check_inputs<F: Scalar>(
    shape: &MlpShape,
    params: &[F],
    x: &DenseMatrix<F>,
    y: &[usize],
) -> Result<()> {
    if params.len() != shape.n_params() {
        return Err(Error::dim("mlp parameters", shape.n_params(), params.len()));
    }
    if x.cols() != shape.n_features {
        return Err(Error::dim("mlp features", shape.n_features, x.cols()));
    }
    if y.len() != x.rows() {
        return Err(Error::Alignment(format!(
            "feature rows ({}) and labels ({}) disagree",
            x.rows(),
            y.len()
        )));
    }
    Ok(())
}

/// L2-regularized mean cross-entropy of the network on (x, y).
///
/// The regularizer covers every parameter, biases included.
pub fn mlp_loss<F: Scalar>(
    shape: &MlpShape,
    params: &[F],
    x: &DenseMatrix<F>,
    y: &[usize],
    l2: F,
) -> Result<F> {
    check_inputs(shape, params, x, y)?;
    let mut loss = F::zero();
    if !y.is_empty() {
        let mut z1 = vec![F::zero(); shape.hidden];
        let mut h = vec![F::zero(); shape.hidden];
        let mut p = vec![F::zero(); shape.n_classes];
        for (i, &yi) in y.iter().enumerate() {
            forward_row(shape, params, x.row(i), &mut z1, &mut h, &mut p);
            loss -= p[yi].max(F::c(1e-300)).ln();
        }
        loss /= F::c(y.len() as f64);
    }
    let reg: F = params.iter().map(|&v| v * v).sum();
    Ok(loss + l2 * reg)
}

/// Backpropagated gradient of [`mlp_loss`] with respect to the flat
/// parameters.
pub fn mlp_gradient<F: Scalar>(
    shape: &MlpShape,
    params: &[F],
    x: &DenseMatrix<F>,
    y: &[usize],
    l2: F,
) -> Result<Vec<F>> {
    check_inputs(shape, params, x, y)?;
    let (w1, b1, w2, b2) = shape.offsets();
    let mut grad = vec![F::zero(); params.len()];
    if !y.is_empty() {
        let inv_n = F::one() / F::c(y.len() as f64);
        let mut z1 = vec![F::zero(); shape.hidden];
        let mut h = vec![F::zero(); shape.hidden];
        let mut p = vec![F::zero(); shape.n_classes];
        let mut dh = vec![F::zero(); shape.hidden];
        for (i, &yi) in y.iter().enumerate() {
            let xi = x.row(i);
            forward_row(shape, params, xi, &mut z1, &mut h, &mut p);
            dh.iter_mut().for_each(|v| *v = F::zero());
            for c in 0..shape.n_classes {
                let mut dz2 = p[c] * inv_n;
                if c == yi {
                    dz2 -= inv_n;
                }
                for j in 0..shape.hidden {
                    grad[w2 + c * shape.hidden + j] += dz2 * h[j];
                    dh[j] += dz2 * params[w2 + c * shape.hidden + j];
                }
                grad[b2 + c] += dz2;
            }
            for j in 0..shape.hidden {
                let dz1 = dh[j] * shape.activation.derivative(z1[j]);
                for (k, &xk) in xi.iter().enumerate() {
                    grad[w1 + j * shape.n_features + k] += dz1 * xk;
                }
                grad[b1 + j] += dz1;
            }
        }
    }
    for (g, &v) in grad.iter_mut().zip(params.iter()) {
        *g += F::c(2.0) * l2 * v;
    }
    Ok(grad)
}

/// A fitted one-hidden-layer MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel<F> {
    shape: MlpShape,
    params: Vec<F>,
    l2: F,
    /// Training loss after each accepted epoch (monotone nonincreasing).
    loss_curve: Vec<F>,
}

impl<F: Scalar> MlpModel<F> {
    /// The network shape.
    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    /// The flat parameter vector.
    pub fn params(&self) -> &[F] {
        &self.params
    }

    /// Training loss after initialization and each epoch.
    pub fn loss_curve(&self) -> &[F] {
        &self.loss_curve
    }

    /// Row-stochastic class probabilities for each row of `x`.
    pub fn predict_proba(&self, x: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if x.cols() != self.shape.n_features {
            return Err(Error::dim(
                "mlp features",
                self.shape.n_features,
                x.cols(),
            ));
        }
        let mut out = DenseMatrix::zeros(x.rows(), self.shape.n_classes);
        let mut z1 = vec![F::zero(); self.shape.hidden];
        let mut h = vec![F::zero(); self.shape.hidden];
        for i in 0..x.rows() {
            let xi = x.row(i).to_vec();
            forward_row(&self.shape, &self.params, &xi, &mut z1, &mut h, out.row_mut(i));
        }
        Ok(out)
    }
}

/// Trains the MLP from a spec (keys `hidden`, `lr`, `epochs`, `l2`,
/// `activation`).
///
/// Weights start at seeded uniform values scaled by 1/√fan-in; each epoch
/// takes the largest step in {lr, lr/2, …} that does not increase the loss.
pub fn fit_mlp<F: Scalar>(
    spec: &LearnerSpec,
    x: &DenseMatrix<F>,
    y: &[usize],
    n_classes: usize,
) -> Result<MlpModel<F>> {
    let hidden = spec.get_usize("hidden", 16)?.max(1);
    let lr = F::c(spec.get_f64("lr", 0.3)?);
    let epochs = spec.get_usize("epochs", 300)?;
    let l2 = F::c(spec.get_f64("l2", 1e-4)?);
    let activation = Activation::parse(&spec.get_text("activation", "tanh")?)?;
    let shape = MlpShape {
        n_features: x.cols(),
        hidden,
        n_classes,
        activation,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w1, b1, w2, b2) = shape.offsets();
    let scale_in = 1.0 / (shape.n_features.max(1) as f64).sqrt();
    let scale_hidden = 1.0 / (hidden as f64).sqrt();
    let mut params = vec![F::zero(); shape.n_params()];
    for v in &mut params[w1..b1] {
        *v = F::c(rng.random_range(-0.5..0.5) * scale_in);
    }
    for v in &mut params[w2..b2] {
        *v = F::c(rng.random_range(-0.5..0.5) * scale_hidden);
    }
    // Biases start at zero.

    let mut loss = mlp_loss(&shape, &params, x, y, l2)?;
    let mut loss_curve = vec![loss];
    for _ in 0..epochs {
        let grad = mlp_gradient(&shape, &params, x, y, l2)?;
        let mut step = lr;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<F> = params
                .iter()
                .zip(grad.iter())
                .map(|(&p, &g)| p - step * g)
                .collect();
            let trial_loss = mlp_loss(&shape, &trial, x, y, l2)?;
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
    Ok(MlpModel {
        shape,
        params,
        l2,
        loss_curve,
    })
}
