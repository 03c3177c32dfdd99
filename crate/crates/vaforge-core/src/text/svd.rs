//! Truncated SVD dimensionality reduction for TF-IDF feature matrices.

use crate::artifact::{load_artifact, save_artifact};
use crate::error::{Error, Result};
use crate::linalg::{svd_truncated, DenseMatrix};
use crate::scalar::Scalar;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

const ARTIFACT_KIND: &str = "vaforge.svd-model";
const ARTIFACT_VERSION: u32 = 1;

/// A fitted truncated-SVD projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdModel<F> {
    /// Right singular vectors, one component per row (`k x D`).
    components: DenseMatrix<F>,
    /// Nonincreasing, nonnegative singular values (`k`).
    singular_values: Vec<F>,
    k: usize,
}

/// Fits a rank-`k` truncated SVD on a training matrix.
pub fn fit_svd<F: Scalar>(x: &DenseMatrix<F>, k: usize, seed: u64) -> Result<SvdModel<F>> {
    let svd = svd_truncated(x, k, seed)?;
    Ok(SvdModel {
        components: svd.vt,
        singular_values: svd.s,
        k,
    })
}

/// Projects a matrix onto the fitted components: `X * components^T`.
pub fn transform_svd<F: Scalar>(model: &SvdModel<F>, x: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
    if x.cols() != model.components.cols() {
        return Err(Error::dim(
            "svd transform input width",
            model.components.cols(),
            x.cols(),
        ));
    }
    x.matmul(&model.components.transpose())
}

impl<F: Scalar> SvdModel<F> {
    /// Number of retained components.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Input dimensionality the model was fitted on.
    pub fn input_dim(&self) -> usize {
        self.components.cols()
    }

    /// The singular values.
    pub fn singular_values(&self) -> &[F] {
        &self.singular_values
    }

    /// The component matrix (`k x D`).
    pub fn components(&self) -> &DenseMatrix<F> {
        &self.components
    }

    /// Checks the model's structural invariants: shapes agree, singular
    /// values are nonincreasing and nonnegative, and component rows are
    /// pairwise orthonormal within `1e-6`.
    pub fn validate(&self) -> Result<()> {
        if self.components.rows() != self.k || self.singular_values.len() != self.k {
            return Err(Error::dim(
                "svd model rank",
                self.k,
                format!(
                    "{} components, {} singular values",
                    self.components.rows(),
                    self.singular_values.len()
                ),
            ));
        }
        for w in self.singular_values.windows(2) {
            if w[1] > w[0] {
                return Err(Error::Schema(
                    "svd singular values are not nonincreasing".into(),
                ));
            }
        }
        if self.singular_values.iter().any(|&s| s < F::zero()) {
            return Err(Error::Schema("svd singular values must be nonnegative".into()));
        }
        let tol = F::c(1e-6);
        for i in 0..self.k {
            for j in i..self.k {
                let dot = self
                    .components
                    .row(i)
                    .iter()
                    .zip(self.components.row(j))
                    .map(|(&a, &b)| a * b)
                    .sum::<F>();
                let want = if i == j { F::one() } else { F::zero() };
                if (dot - want).abs() > tol {
                    return Err(Error::Schema(format!(
                        "svd component rows {i} and {j} are not orthonormal (dot = {dot})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes the model as a versioned JSON artifact.
    pub fn save(&self, path: &Path) -> Result<()>
    where
        F: Serialize,
    {
        save_artifact(path, ARTIFACT_KIND, ARTIFACT_VERSION, self)
    }

    /// Reads a model artifact and validates its invariants.
    pub fn load(path: &Path) -> Result<Self>
    where
        F: DeserializeOwned,
    {
        let model: SvdModel<F> = load_artifact(path, ARTIFACT_KIND, ARTIFACT_VERSION)?;
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag3() -> DenseMatrix<f64> {
        DenseMatrix::from_vec(3, 3, vec![3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn diagonal_spectrum_is_recovered() {
        let model = fit_svd(&diag3(), 2, 0).unwrap();
        assert!((model.singular_values()[0] - 3.0).abs() < 1e-12);
        assert!((model.singular_values()[1] - 2.0).abs() < 1e-12);
        model.validate().unwrap();
    }

    #[test]
    fn full_rank_fit_reconstructs_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DenseMatrix::from_vec(
            8,
            5,
            (0..40).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let model = fit_svd(&x, 5, 0).unwrap();
        let projected = transform_svd(&model, &x).unwrap();
        // Project back up: X ~ (X V^T) V.
        let back = projected.matmul(model.components()).unwrap();
        assert!(back.sub(&x).unwrap().frobenius_norm() < 1e-8);
    }

    #[test]
    fn rank_one_outer_product_singular_value() {
        let u = [2.0, 1.0, 2.0]; // norm 3
        let v = [0.0, 4.0, 3.0]; // norm 5
        let mut x = DenseMatrix::<f64>::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                x.set(i, j, u[i] * v[j]);
            }
        }
        let model = fit_svd(&x, 1, 0).unwrap();
        assert!((model.singular_values()[0] - 15.0).abs() < 1e-10);
    }

    #[test]
    fn transform_is_projection_onto_components() {
        let x = diag3();
        let model = fit_svd(&x, 2, 0).unwrap();
        let projected = transform_svd(&model, &x).unwrap();
        assert_eq!(projected.shape(), (3, 2));
        let manual = x.matmul(&model.components().transpose()).unwrap();
        assert_eq!(projected.data(), manual.data());
    }

    #[test]
    fn transform_rejects_wrong_width() {
        let model = fit_svd(&diag3(), 2, 0).unwrap();
        let narrow = DenseMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            transform_svd(&model, &narrow),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn artifact_round_trip_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("svd.json");
        let model = fit_svd(&diag3(), 2, 0).unwrap();
        model.save(&path).unwrap();
        let back = SvdModel::<f64>::load(&path).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn corrupted_artifact_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("svd.json");
        let mut model = fit_svd(&diag3(), 2, 0).unwrap();
        // Break orthonormality directly.
        model.components.set(0, 0, 5.0);
        model.save(&path).unwrap();
        let err = SvdModel::<f64>::load(&path).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }
}
