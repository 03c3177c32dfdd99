//! Adapter for externally produced probability matrices.
//!
//! Narrative language models or epidemiological tools that run outside this
//! crate join an ensemble by exporting per-record class probabilities as CSV
//! (`id,<class...>` header). The adapter loads that file once and serves
//! rows by record id, ignoring feature values entirely — so "refitting" it
//! on any training subset reuses the same fixed matrix, which is exactly the
//! behaviour cross-validated stacking needs from a frozen upstream model.
//!
//! Rows whose probabilities sum close to one (within 1e-3) are repaired by
//! renormalization; anything further off is rejected as corrupt.

use crate::error::{Error, Result};
use crate::prob::ProbMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use super::LearnerSpec;

/// Row sums may deviate from one by at most this much before erroring.
pub const EXTERNAL_ROW_SUM_TOLERANCE: f64 = 1e-3;

/// Loads an external prediction CSV and aligns its columns to `class_list`.
///
/// The file's class columns must be exactly `class_list` up to order; rows
/// are renormalized within [`EXTERNAL_ROW_SUM_TOLERANCE`].
pub fn load_external_predictions<F: Scalar>(
    path: &Path,
    class_list: &[String],
) -> Result<ProbMatrix<F>> {
    let raw = ProbMatrix::from_csv(path, EXTERNAL_ROW_SUM_TOLERANCE)?;
    let have: BTreeSet<&str> = raw.classes().iter().map(String::as_str).collect();
    let want: BTreeSet<&str> = class_list.iter().map(String::as_str).collect();
    if have != want {
        return Err(Error::Schema(format!(
            "external prediction classes {:?} do not match expected {:?}",
            raw.classes(),
            class_list
        )));
    }
    raw.reorder_classes(class_list)
}

/// A fixed probability matrix served by record id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalModel<F> {
    predictions: ProbMatrix<F>,
}

impl<F: Scalar> ExternalModel<F> {
    /// The full loaded matrix.
    pub fn predictions(&self) -> &ProbMatrix<F> {
        &self.predictions
    }

    /// Looks up the stored rows for `ids`, reordered to `class_list`.
    pub fn predict_proba(&self, ids: &[String], class_list: &[String]) -> Result<ProbMatrix<F>> {
        self.predictions.reorder_classes(class_list)?.select_ids(ids)
    }
}

/// Builds the adapter from a spec (required key `path`).
pub fn fit_external<F: Scalar>(
    spec: &LearnerSpec,
    class_list: &[String],
) -> Result<ExternalModel<F>> {
    let path = spec.get_text("path", "")?;
    if path.is_empty() {
        return Err(Error::Schema(
            "external learner requires a \"path\" hyperparameter".into(),
        ));
    }
    let predictions = load_external_predictions(Path::new(&path), class_list)?;
    Ok(ExternalModel { predictions })
}
