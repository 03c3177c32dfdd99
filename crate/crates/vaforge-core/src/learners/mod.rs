//! Base classifiers behind one interface.
//!
//! Every learner — multinomial logistic regression, a one-hidden-layer MLP,
//! one-vs-rest gradient-boosted trees, k-nearest-neighbours, and an adapter
//! for externally produced probabilities — is described by a [`LearnerSpec`]
//! (kind, hyperparameters, seed) and trained through [`fit`], yielding an
//! immutable [`FittedModel`] whose `predict_proba` returns a row-stochastic
//! [`ProbMatrix`].
//!
//! Training is deterministic given the spec's seed, and fitted models
//! serialize to versioned JSON artifacts so they can be reused across runs.

pub mod external;
pub mod gbdt;
pub mod knn;
pub mod logreg;
pub mod mlp;

pub use external::load_external_predictions;
pub use logreg::{logreg_gradient, logreg_loss};

use crate::artifact::{load_artifact, save_artifact};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::prob::ProbMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Artifact kind tag for serialized fitted models.
pub const MODEL_ARTIFACT_KIND: &str = "vaforge.model";
/// Artifact schema version for serialized fitted models.
pub const MODEL_ARTIFACT_VERSION: u32 = 1;

/// The learner families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logreg,
    Mlp,
    Gbdt,
    Knn,
    External,
}

impl LearnerKind {
    /// Hyperparameter keys this kind accepts.
    pub fn declared_keys(self) -> &'static [&'static str] {
        match self {
            LearnerKind::Logreg => &["lr", "epochs", "l2"],
            LearnerKind::Mlp => &["hidden", "lr", "epochs", "l2", "activation"],
            LearnerKind::Gbdt => &[
                "n_estimators",
                "learning_rate",
                "max_depth",
                "min_samples_leaf",
            ],
            LearnerKind::Knn => &["k"],
            LearnerKind::External => &["path"],
        }
    }
}

/// A single hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Int(i64),
    Float(f64),
    Text(String),
}

/// A learner description: family, hyperparameters, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, HyperValue>,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    /// A spec with default hyperparameters.
    pub fn new(kind: LearnerKind, seed: u64) -> Self {
        LearnerSpec {
            kind,
            hyperparams: BTreeMap::new(),
            seed,
        }
    }

    /// Sets one hyperparameter, builder style.
    pub fn with(mut self, key: &str, value: HyperValue) -> Self {
        self.hyperparams.insert(key.to_string(), value);
        self
    }

    /// Sets a float hyperparameter, builder style.
    pub fn with_f64(self, key: &str, value: f64) -> Self {
        self.with(key, HyperValue::Float(value))
    }

    /// Sets an integer hyperparameter, builder style.
    pub fn with_int(self, key: &str, value: i64) -> Self {
        self.with(key, HyperValue::Int(value))
    }

    /// Sets a text hyperparameter, builder style.
    pub fn with_text(self, key: &str, value: &str) -> Self {
        self.with(key, HyperValue::Text(value.to_string()))
    }

    /// Checks that every hyperparameter key belongs to the kind's space.
    pub fn validate(&self) -> Result<()> {
        let declared = self.kind.declared_keys();
        for key in self.hyperparams.keys() {
            if !declared.contains(&key.as_str()) {
                return Err(Error::Schema(format!(
                    "hyperparameter {key:?} is not in the {:?} space {declared:?}",
                    self.kind
                )));
            }
        }
        Ok(())
    }

    /// A float hyperparameter (integers coerce), or the default.
    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(HyperValue::Float(v)) => Ok(*v),
            Some(HyperValue::Int(v)) => Ok(*v as f64),
            Some(HyperValue::Text(v)) => Err(Error::Schema(format!(
                "hyperparameter {key:?} must be numeric, got {v:?}"
            ))),
        }
    }

    /// A nonnegative integer hyperparameter, or the default.
    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(HyperValue::Int(v)) if *v >= 0 => Ok(*v as usize),
            Some(HyperValue::Float(v)) if *v >= 0.0 && v.fract() == 0.0 => Ok(*v as usize),
            Some(other) => Err(Error::Schema(format!(
                "hyperparameter {key:?} must be a nonnegative integer, got {other:?}"
            ))),
        }
    }

    /// A text hyperparameter, or the default.
    pub fn get_text(&self, key: &str, default: &str) -> Result<String> {
        match self.hyperparams.get(key) {
            None => Ok(default.to_string()),
            Some(HyperValue::Text(v)) => Ok(v.clone()),
            Some(other) => Err(Error::Schema(format!(
                "hyperparameter {key:?} must be text, got {other:?}"
            ))),
        }
    }
}

/// Learned parameters, one variant per kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams<F> {
    Logreg(logreg::LogregModel<F>),
    Mlp(mlp::MlpModel<F>),
    Gbdt(gbdt::GbdtModel<F>),
    Knn(knn::KnnModel<F>),
    External(external::ExternalModel<F>),
}

/// A trained classifier: spec, ordered class list, and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel<F> {
    spec: LearnerSpec,
    class_list: Vec<String>,
    params: ModelParams<F>,
}

impl<F: Scalar> FittedModel<F> {
    /// The spec this model was trained from.
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    /// Ordered class labels; probability columns follow this order.
    pub fn classes(&self) -> &[String] {
        &self.class_list
    }

    /// The learned parameters.
    pub fn params(&self) -> &ModelParams<F> {
        &self.params
    }

    /// Predicts class probabilities for each row of `x`.
    ///
    /// The feature width must match training; rows are returned in input
    /// order and each sums to one.
    pub fn predict_proba(&self, x: &FeatureMatrix<F>) -> Result<ProbMatrix<F>> {
        let scores = match &self.params {
            ModelParams::Logreg(m) => m.predict_proba(x.values())?,
            ModelParams::Mlp(m) => m.predict_proba(x.values())?,
            ModelParams::Gbdt(m) => m.predict_proba(x.values())?,
            ModelParams::Knn(m) => m.predict_proba(x.values())?,
            ModelParams::External(m) => {
                return m.predict_proba(x.ids(), &self.class_list);
            }
        };
        ProbMatrix::new(x.ids().to_vec(), self.class_list.clone(), scores)
    }

    /// Saves the model as a versioned JSON artifact.
    pub fn save(&self, path: &Path) -> Result<()>
    where
        F: Serialize,
    {
        save_artifact(path, MODEL_ARTIFACT_KIND, MODEL_ARTIFACT_VERSION, self)
    }

    /// Loads a model saved by [`FittedModel::save`].
    pub fn load(path: &Path) -> Result<Self>
    where
        F: for<'de> Deserialize<'de>,
    {
        load_artifact(path, MODEL_ARTIFACT_KIND, MODEL_ARTIFACT_VERSION)
    }
}

/// Maps labels to indices into the sorted unique class list.
fn class_indices(y: &[String]) -> (Vec<String>, Vec<usize>) {
    let classes: Vec<String> = y
        .iter()
        .cloned()
        .collect::<BTreeSet<String>>()
        .into_iter()
        .collect();
    let position: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let indices = y.iter().map(|label| position[label.as_str()]).collect();
    (classes, indices)
}

/// Trains a model.
///
/// Requires at least two rows and two distinct classes; features must be
/// finite. The class list is the sorted set of labels seen in `y`. Training
/// is deterministic given the spec (including its seed).
pub fn fit<F: Scalar>(
    spec: &LearnerSpec,
    x: &FeatureMatrix<F>,
    y: &[String],
) -> Result<FittedModel<F>> {
    spec.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::Alignment(format!(
            "feature rows ({}) and labels ({}) disagree",
            x.n_rows(),
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 training rows, got {}",
            y.len()
        )));
    }
    let (class_list, y_idx) = class_indices(y);
    if class_list.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 distinct classes, got {:?}",
            class_list
        )));
    }
    x.values().ensure_finite("training features")?;

    let n_classes = class_list.len();
    let params = match spec.kind {
        LearnerKind::Logreg => {
            ModelParams::Logreg(logreg::fit_logreg(spec, x.values(), &y_idx, n_classes)?)
        }
        LearnerKind::Mlp => ModelParams::Mlp(mlp::fit_mlp(spec, x.values(), &y_idx, n_classes)?),
        LearnerKind::Gbdt => {
            ModelParams::Gbdt(gbdt::fit_gbdt(spec, x.values(), &y_idx, n_classes)?)
        }
        LearnerKind::Knn => ModelParams::Knn(knn::fit_knn(spec, x.values(), &y_idx, n_classes)?),
        LearnerKind::External => {
            ModelParams::External(external::fit_external(spec, &class_list)?)
        }
    };
    Ok(FittedModel {
        spec: spec.clone(),
        class_list,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn xy(rows: &[Vec<f64>], labels: &[&str]) -> (FeatureMatrix<f64>, Vec<String>) {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..rows[0].len()).map(|i| format!("f{i}")).collect();
        let x = FeatureMatrix::new(ids, cols, DenseMatrix::from_rows(rows).unwrap()).unwrap();
        (x, labels.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn spec_validation_rejects_foreign_keys() {
        let spec = LearnerSpec::new(LearnerKind::Logreg, 0).with_f64("gamma", 0.1);
        assert!(matches!(spec.validate(), Err(Error::Schema(_))));
        let spec = LearnerSpec::new(LearnerKind::Logreg, 0).with_f64("lr", 0.1);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn hyperparameter_getters_coerce_and_default() {
        let spec = LearnerSpec::new(LearnerKind::Mlp, 0)
            .with_int("hidden", 8)
            .with_f64("lr", 0.25)
            .with_text("activation", "relu");
        assert_eq!(spec.get_usize("hidden", 16).unwrap(), 8);
        assert_eq!(spec.get_f64("hidden", 0.0).unwrap(), 8.0);
        assert_eq!(spec.get_f64("lr", 0.0).unwrap(), 0.25);
        assert_eq!(spec.get_text("activation", "tanh").unwrap(), "relu");
        assert_eq!(spec.get_usize("epochs", 300).unwrap(), 300);
        assert!(spec.get_usize("lr", 0).is_err());
    }

    #[test]
    fn fit_rejects_degenerate_data() {
        let (x, _) = xy(&[vec![0.0], vec![1.0]], &["a", "a"]);
        let spec = LearnerSpec::new(LearnerKind::Logreg, 0);
        let single = vec!["a".to_string(), "a".to_string()];
        assert!(matches!(
            fit(&spec, &x, &single),
            Err(Error::DegenerateData(_))
        ));

        let (x1, y1) = xy(&[vec![0.0]], &["a"]);
        assert!(matches!(fit(&spec, &x1, &y1), Err(Error::DegenerateData(_))));

        let (x2, y2) = xy(&[vec![0.0], vec![1.0]], &["a", "b"]);
        assert!(matches!(
            fit(&spec, &x2, &y2[..1].to_vec()),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn fit_rejects_non_finite_features() {
        let (x, y) = xy(&[vec![0.0], vec![f64::NAN]], &["a", "b"]);
        let spec = LearnerSpec::new(LearnerKind::Logreg, 0);
        assert!(matches!(fit(&spec, &x, &y), Err(Error::NonFinite(_))));
    }

    #[test]
    fn class_list_is_sorted_unique() {
        let (x, y) = xy(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            &["zeta", "alpha", "zeta", "mid"],
        );
        let spec = LearnerSpec::new(LearnerKind::Knn, 0).with_int("k", 1);
        let model = fit(&spec, &x, &y).unwrap();
        assert_eq!(model.classes(), &["alpha", "mid", "zeta"]);
    }

    #[test]
    fn predict_checks_feature_width() {
        let (x, y) = xy(&[vec![0.0, 1.0], vec![1.0, 0.0]], &["a", "b"]);
        let spec = LearnerSpec::new(LearnerKind::Logreg, 0);
        let model = fit(&spec, &x, &y).unwrap();
        let (narrow, _) = xy(&[vec![0.0]], &["a"]);
        assert!(matches!(
            model.predict_proba(&narrow),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn model_artifact_round_trip() {
        let (x, y) = xy(&[vec![0.0], vec![1.0], vec![2.0]], &["a", "b", "a"]);
        let spec = LearnerSpec::new(LearnerKind::Logreg, 7).with_int("epochs", 20);
        let model = fit(&spec, &x, &y).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let back: FittedModel<f64> = FittedModel::load(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(
            back.predict_proba(&x).unwrap(),
            model.predict_proba(&x).unwrap()
        );
    }

    #[test]
    fn hyper_value_json_shapes() {
        let spec = LearnerSpec::new(LearnerKind::Mlp, 3)
            .with_int("hidden", 8)
            .with_f64("lr", 0.5)
            .with_text("activation", "tanh");
        let json = serde_json::to_string(&spec).unwrap();
        let back: LearnerSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(json.contains("\"hidden\":8"));
        assert!(json.contains("\"lr\":0.5"));
    }
}
