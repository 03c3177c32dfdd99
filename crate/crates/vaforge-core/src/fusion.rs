//! Multimodal fusion strategies.
//!
//! Three ways to combine narrative and questionnaire models:
//!
//! - **Feature-level**: [`fuse_features`] concatenates the two feature
//!   blocks (text first) so one learner sees both modalities.
//! - **Soft voting**: [`soft_vote`] averages the probability matrices of
//!   several fitted models and takes the argmax of the mean.
//! - **Stacking**: [`generate_oof`] produces out-of-fold (OOF) predictions
//!   per base model via stratified cross-validation, [`stack_train`] fits a
//!   meta-learner on the horizontally stacked OOF probabilities, and
//!   [`stack_predict`] applies the meta-learner to base predictions from
//!   models refit on the full training set.
//!
//! Data-level fusion needs no machinery here: it is the composition of
//! sentence rendering, document fusion, and a single text model.
//!
//! External prediction adapters hold one fixed matrix, so inside OOF
//! generation they bypass training and slice that matrix per fold; such
//! bases are flagged `static-adapter` because their rows were not produced
//! out-of-fold.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::{fit, FittedModel, LearnerKind, LearnerSpec};
use crate::prob::ProbMatrix;
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Artifact kind tag for ensemble manifests.
pub const MANIFEST_ARTIFACT_KIND: &str = "vaforge.ensemble-manifest";
/// Artifact schema version for ensemble manifests.
pub const MANIFEST_ARTIFACT_VERSION: u32 = 1;

/// Concatenates text features (first) with tabular features (second).
///
/// Ids must agree in content and order. Column names are preserved; if any
/// name appears in both blocks, every column is prefixed with its source
/// (`text:` / `tab:`) so the result has no collisions.
pub fn fuse_features<F: Scalar>(
    text_feats: &FeatureMatrix<F>,
    tab_feats: &FeatureMatrix<F>,
) -> Result<FeatureMatrix<F>> {
    if text_feats.ids() != tab_feats.ids() {
        return Err(Error::Alignment(
            "text and tabular feature ids disagree".into(),
        ));
    }
    let text_names: BTreeSet<&String> = text_feats.columns().iter().collect();
    let collision = tab_feats.columns().iter().any(|c| text_names.contains(c));
    let mut columns = Vec::with_capacity(text_feats.n_cols() + tab_feats.n_cols());
    if collision {
        columns.extend(text_feats.columns().iter().map(|c| format!("text:{c}")));
        columns.extend(tab_feats.columns().iter().map(|c| format!("tab:{c}")));
    } else {
        columns.extend(text_feats.columns().iter().cloned());
        columns.extend(tab_feats.columns().iter().cloned());
    }
    let values = text_feats.values().hstack(tab_feats.values())?;
    FeatureMatrix::new(text_feats.ids().to_vec(), columns, values)
}

/// Averages probability matrices and labels each record by the argmax of
/// the mean.
///
/// The first matrix fixes id and class order; the others are aligned to it
/// by name. Every output entry is exactly (1/M)·Σ of the member entries.
pub fn soft_vote<F: Scalar>(mats: &[ProbMatrix<F>]) -> Result<(ProbMatrix<F>, Vec<String>)> {
    let first = mats.first().ok_or(Error::EmptyEnsemble)?;
    let ids = first.ids().to_vec();
    let classes = first.classes().to_vec();
    let mut sum = first.values().clone();
    for m in &mats[1..] {
        let aligned = m.reorder_classes(&classes)?.select_ids(&ids)?;
        sum = sum.add(aligned.values())?;
    }
    let inv_m = F::one() / F::c(mats.len() as f64);
    for v in sum.data_mut() {
        *v *= inv_m;
    }
    let voted = ProbMatrix::new(ids, classes, sum)?;
    let labels = voted
        .predicted_classes()
        .into_iter()
        .map(str::to_string)
        .collect();
    Ok((voted, labels))
}

/// Cross-validated predictions for one base model: every training id is
/// predicted by a model whose training folds excluded it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofPrediction<F> {
    /// Human-readable base name; `static-adapter:<path>` for external bases.
    pub model_name: String,
    /// The spec the folds were trained from.
    pub spec: LearnerSpec,
    /// One row per training id, in dataset record order.
    pub predictions: ProbMatrix<F>,
    /// Which fold held each id out.
    pub fold_of: BTreeMap<String, usize>,
}

fn display_name(spec: &LearnerSpec) -> String {
    match spec.kind {
        LearnerKind::Logreg => "logreg".into(),
        LearnerKind::Mlp => "mlp".into(),
        LearnerKind::Gbdt => "gbdt".into(),
        LearnerKind::Knn => "knn".into(),
        LearnerKind::External => {
            let path = spec.get_text("path", "").unwrap_or_default();
            format!("static-adapter:{path}")
        }
    }
}

/// Looks up each id's label at the dataset's working level, in order.
pub fn labels_for(ds: &Dataset, ids: &[String]) -> Result<Vec<String>> {
    let by_id: BTreeMap<&str, &crate::data::VARecord> =
        ds.records().iter().map(|r| (r.id.as_str(), r)).collect();
    ids.iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .and_then(|r| ds.label_of(r))
                .map(str::to_string)
                .ok_or_else(|| {
                    Error::Label(format!("record {id:?} has no label at the working level"))
                })
        })
        .collect()
}

/// Generates out-of-fold predictions with stratified k-fold splitting.
///
/// Each fold trains on the other folds (fold model seed = `seed` + fold
/// index) and predicts its own validation ids; fold jobs run in parallel
/// and results are assembled in dataset order, so output is independent of
/// scheduling. External-adapter specs skip training and slice their fixed
/// matrix, which cannot be leakage-free — hence the `static-adapter` name.
pub fn generate_oof<F: Scalar>(
    spec: &LearnerSpec,
    ds: &Dataset,
    features: &FeatureMatrix<F>,
    k: usize,
    seed: u64,
) -> Result<OofPrediction<F>> {
    let folds = crate::data::stratified_kfold(ds, k, seed)?;
    let fold_outputs: Vec<ProbMatrix<F>> = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| -> Result<ProbMatrix<F>> {
            let mut fold_spec = spec.clone();
            fold_spec.seed = seed + i as u64;
            let x_train = features.select_ids(&fold.train_ids)?;
            let y_train = labels_for(ds, &fold.train_ids)?;
            let model = fit(&fold_spec, &x_train, &y_train)?;
            let x_val = features.select_ids(&fold.val_ids)?;
            model.predict_proba(&x_val)
        })
        .collect::<Result<Vec<_>>>()?;

    // All folds share the full class list; align to the first fold's order.
    let classes = fold_outputs[0].classes().to_vec();
    let mut rows: BTreeMap<&str, &[F]> = BTreeMap::new();
    let mut fold_of = BTreeMap::new();
    for ((i, fold), output) in folds.iter().enumerate().zip(&fold_outputs) {
        let aligned_check = output.classes().iter().collect::<BTreeSet<_>>();
        if aligned_check != classes.iter().collect::<BTreeSet<_>>() {
            return Err(Error::Fold(format!(
                "fold {i} produced class list {:?}, expected {:?}",
                output.classes(),
                classes
            )));
        }
        for id in &fold.val_ids {
            fold_of.insert(id.clone(), i);
        }
    }
    let realigned: Vec<ProbMatrix<F>> = fold_outputs
        .iter()
        .map(|o| o.reorder_classes(&classes))
        .collect::<Result<_>>()?;
    for output in &realigned {
        for (r, id) in output.ids().iter().enumerate() {
            rows.insert(id.as_str(), output.values().row(r));
        }
    }
    let ids = ds.labeled_ids();
    let mut values = crate::linalg::DenseMatrix::zeros(ids.len(), classes.len());
    for (r, id) in ids.iter().enumerate() {
        let row = rows
            .get(id.as_str())
            .ok_or_else(|| Error::Fold(format!("id {id:?} missing from all folds")))?;
        values.row_mut(r).copy_from_slice(row);
    }
    Ok(OofPrediction {
        model_name: display_name(spec),
        spec: spec.clone(),
        predictions: ProbMatrix::new(ids, classes, values)?,
        fold_of,
    })
}

/// A stacking ensemble: ordered base specs plus a meta-learner fitted on
/// their concatenated probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel<F> {
    base_specs: Vec<LearnerSpec>,
    base_names: Vec<String>,
    /// Class list each base's block is ordered by.
    base_classes: Vec<Vec<String>>,
    meta: FittedModel<F>,
}

impl<F: Scalar> StackedModel<F> {
    /// The ordered base specs.
    pub fn base_specs(&self) -> &[LearnerSpec] {
        &self.base_specs
    }

    /// The fitted meta-learner.
    pub fn meta(&self) -> &FittedModel<F> {
        &self.meta
    }

    /// Named columns of the meta-learner input.
    fn meta_columns(&self) -> Vec<String> {
        meta_column_names(&self.base_names, &self.base_classes)
    }
}

/// One meta-input column per base class, namespaced by base position and
/// name so repeated learner kinds stay distinguishable.
fn meta_column_names(base_names: &[String], base_classes: &[Vec<String>]) -> Vec<String> {
    base_names
        .iter()
        .enumerate()
        .zip(base_classes)
        .flat_map(|((i, name), classes)| {
            classes
                .iter()
                .map(move |c| format!("b{i}:{name}:{c}"))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Trains the meta-learner on horizontally stacked OOF probabilities.
///
/// `y` is aligned with the first OOF's id order; all OOFs must cover the
/// same ids. The meta input width is the sum of the bases' class counts.
pub fn stack_train<F: Scalar>(
    oofs: &[OofPrediction<F>],
    y: &[String],
    meta_spec: &LearnerSpec,
) -> Result<StackedModel<F>> {
    let first = oofs.first().ok_or(Error::EmptyEnsemble)?;
    let ids = first.predictions.ids().to_vec();
    if y.len() != ids.len() {
        return Err(Error::Alignment(format!(
            "labels ({}) and OOF ids ({}) disagree",
            y.len(),
            ids.len()
        )));
    }
    let mut stacked = first.predictions.values().clone();
    for oof in &oofs[1..] {
        let aligned = oof.predictions.select_ids(&ids)?;
        stacked = stacked.hstack(aligned.values())?;
    }
    let base_names: Vec<String> = oofs.iter().map(|o| o.model_name.clone()).collect();
    let base_classes: Vec<Vec<String>> = oofs
        .iter()
        .map(|o| o.predictions.classes().to_vec())
        .collect();
    let columns = meta_column_names(&base_names, &base_classes);
    let meta_in = FeatureMatrix::new(ids, columns, stacked)?;
    let meta = fit(meta_spec, &meta_in, y)?;
    Ok(StackedModel {
        base_specs: oofs.iter().map(|o| o.spec.clone()).collect(),
        base_names,
        base_classes,
        meta,
    })
}

/// Applies the stacked ensemble to test data.
///
/// `models` are the bases refit on the full training set, in the same order
/// as the manifest's base specs; each pairs with its own feature matrix in
/// `tests`. A base whose spec disagrees with the stored spec at that
/// position is rejected before prediction.
pub fn stack_predict<F: Scalar>(
    stacked: &StackedModel<F>,
    models: &[FittedModel<F>],
    tests: &[FeatureMatrix<F>],
) -> Result<(ProbMatrix<F>, Vec<String>)> {
    if models.len() != stacked.base_specs.len() || tests.len() != models.len() {
        return Err(Error::dim(
            "stacked bases",
            stacked.base_specs.len(),
            models.len().min(tests.len()),
        ));
    }
    for (i, model) in models.iter().enumerate() {
        if model.spec() != &stacked.base_specs[i] {
            return Err(Error::Dimension(format!(
                "base {i} spec does not match the stacked manifest (base order changed?)"
            )));
        }
    }
    let mut blocks = Vec::with_capacity(models.len());
    let mut ids: Option<Vec<String>> = None;
    for ((model, x), classes) in models.iter().zip(tests).zip(&stacked.base_classes) {
        let probs = model.predict_proba(x)?.reorder_classes(classes)?;
        match &ids {
            None => ids = Some(probs.ids().to_vec()),
            Some(ids) => {
                if probs.ids() != &ids[..] {
                    return Err(Error::Alignment(
                        "base test predictions cover different ids".into(),
                    ));
                }
            }
        }
        blocks.push(probs);
    }
    let ids = ids.expect("at least one base checked above");
    let mut stacked_values = blocks[0].values().clone();
    for block in &blocks[1..] {
        stacked_values = stacked_values.hstack(block.values())?;
    }
    let meta_in = FeatureMatrix::new(ids, stacked.meta_columns(), stacked_values)?;
    let probs = stacked.meta.predict_proba(&meta_in)?;
    let labels = probs
        .predicted_classes()
        .into_iter()
        .map(str::to_string)
        .collect();
    Ok((probs, labels))
}

/// Everything needed to replay an ensemble run bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub base_specs: Vec<LearnerSpec>,
    /// None means soft voting instead of stacking.
    pub meta_spec: Option<LearnerSpec>,
    pub k_folds: usize,
    pub seed: u64,
}

impl EnsembleManifest {
    /// Saves the manifest as a versioned JSON artifact.
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::artifact::save_artifact(path, MANIFEST_ARTIFACT_KIND, MANIFEST_ARTIFACT_VERSION, self)
    }

    /// Loads a manifest saved by [`EnsembleManifest::save`].
    pub fn load(path: &Path) -> Result<Self> {
        crate::artifact::load_artifact(path, MANIFEST_ARTIFACT_KIND, MANIFEST_ARTIFACT_VERSION)
    }
}
