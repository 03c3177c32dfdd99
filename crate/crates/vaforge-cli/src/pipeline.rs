//! Shared pipeline machinery: splitting, featurization, fitting, and
//! artifact emission used by `run`, `ensemble`, `hpo`, `sensitivity`, and
//! `ablation`.

use crate::config::{FeatureSpace, LearnerEntry, RunConfig};
use crate::io::{fmt_f64, write_csv};
use anyhow::{Context, Result};
use std::collections::BTreeMap;
use std::path::Path;
use vaforge_core::data::{Dataset, VARecord};
use vaforge_core::features::{FeatureMatrix, NarrativeFeaturizer, TabularEncoder};
use vaforge_core::fusion::{fuse_features, labels_for};
use vaforge_core::learners::{fit, FittedModel};
use vaforge_core::metrics::{evaluate, ConfusionMatrix, MetricReport};
use vaforge_core::prob::ProbMatrix;
use vaforge_core::template::{build_fused_document, TemplateTable};

/// Train/test feature matrices for one feature space.
pub struct FeatureBundle {
    pub train: FeatureMatrix<f64>,
    pub test: FeatureMatrix<f64>,
}

/// Builds feature bundles lazily so each space is computed at most once
/// per run, with all featurizers fitted on the training side only.
pub struct Featurizer<'a> {
    train: &'a Dataset,
    test: &'a Dataset,
    config: &'a RunConfig,
    table: &'a TemplateTable,
    cache: BTreeMap<FeatureSpace, FeatureBundle>,
}

impl<'a> Featurizer<'a> {
    pub fn new(
        train: &'a Dataset,
        test: &'a Dataset,
        config: &'a RunConfig,
        table: &'a TemplateTable,
    ) -> Self {
        Featurizer {
            train,
            test,
            config,
            table,
            cache: BTreeMap::new(),
        }
    }

    /// The bundle for a feature space, building it on first use.
    pub fn bundle(&mut self, space: FeatureSpace) -> Result<&FeatureBundle> {
        if !self.cache.contains_key(&space) {
            let bundle = self.build(space)?;
            self.cache.insert(space, bundle);
        }
        Ok(&self.cache[&space])
    }

    fn build(&mut self, space: FeatureSpace) -> Result<FeatureBundle> {
        let seed = self.config.split.seed;
        match space {
            FeatureSpace::Narrative => {
                let featurizer = NarrativeFeaturizer::<f64>::fit(
                    self.train.records(),
                    &self.config.narrative,
                    seed,
                )?;
                Ok(FeatureBundle {
                    train: featurizer.transform(self.train.records())?,
                    test: featurizer.transform(self.test.records())?,
                })
            }
            FeatureSpace::Questions => {
                let encoder = TabularEncoder::fit(self.train.records());
                Ok(FeatureBundle {
                    train: encoder.encode(self.train.records())?,
                    test: encoder.encode(self.test.records())?,
                })
            }
            FeatureSpace::Fused => {
                // Build the parts via the cache so unimodal and fused
                // learners in one run share the same fitted featurizers.
                self.bundle(FeatureSpace::Narrative)?;
                self.bundle(FeatureSpace::Questions)?;
                let text = &self.cache[&FeatureSpace::Narrative];
                let tab = &self.cache[&FeatureSpace::Questions];
                Ok(FeatureBundle {
                    train: fuse_features(&text.train, &tab.train)?,
                    test: fuse_features(&text.test, &tab.test)?,
                })
            }
            FeatureSpace::DataFused => {
                let fused_records = |ds: &Dataset| -> Vec<VARecord> {
                    ds.records()
                        .iter()
                        .map(|rec| {
                            let mut clone = rec.clone();
                            clone.narrative = build_fused_document(rec, self.table);
                            clone
                        })
                        .collect()
                };
                let train_fused = fused_records(self.train);
                let test_fused = fused_records(self.test);
                let featurizer = NarrativeFeaturizer::<f64>::fit(
                    &train_fused,
                    &self.config.narrative,
                    seed,
                )?;
                Ok(FeatureBundle {
                    train: featurizer.transform(&train_fused)?,
                    test: featurizer.transform(&test_fused)?,
                })
            }
        }
    }
}

/// Fits one learner entry on its feature space and predicts the test side.
pub fn fit_and_predict(
    entry: &LearnerEntry,
    featurizer: &mut Featurizer<'_>,
    y_train: &[String],
) -> Result<(FittedModel<f64>, ProbMatrix<f64>)> {
    let name = entry.display_name();
    let bundle = featurizer.bundle(entry.features)?;
    let model = fit(&entry.spec, &bundle.train, y_train)
        .with_context(|| format!("fitting learner {name}"))?;
    let probs = model
        .predict_proba(&bundle.test)
        .with_context(|| format!("predicting with learner {name}"))?;
    Ok((model, probs))
}

/// Scores predictions against the dataset's labels and writes the
/// standard artifact set: `metrics.json`, `confusion.csv`, `csmf.csv`,
/// and `predictions.csv`.
pub fn evaluate_and_write(
    dataset: &Dataset,
    probs: &ProbMatrix<f64>,
    out_dir: &Path,
) -> Result<(MetricReport<f64>, ConfusionMatrix)> {
    let truth = labels_for(dataset, probs.ids())?;
    let (report, cm) = evaluate(&truth, probs)?;
    report.write_json(&out_dir.join("metrics.json"))?;
    cm.to_csv(&out_dir.join("confusion.csv"))?;
    write_csmf_csv(&out_dir.join("csmf.csv"), &report)?;
    probs.to_csv(&out_dir.join("predictions.csv"))?;
    Ok((report, cm))
}

/// Writes the cause-specific mortality fraction table: one row per class
/// with the true fraction and both predicted variants.
pub fn write_csmf_csv(path: &Path, report: &MetricReport<f64>) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            vec![
                class.clone(),
                fmt_f64(report.true_csmf[i]),
                fmt_f64(report.pred_csmf_mean_prob[i]),
                fmt_f64(report.pred_csmf_top_cause[i]),
            ]
        })
        .collect();
    write_csv(
        path,
        &["class", "true_csmf", "pred_csmf_mean_prob", "pred_csmf_top_cause"],
        &rows,
    )
}

/// One-line human summary of a report, for command stdout.
pub fn summary_line(report: &MetricReport<f64>) -> String {
    format!(
        "n={} accuracy={:.4} weighted_f1={:.4} csmf_accuracy={:.4}",
        report.n_records,
        report.accuracy,
        report.weighted.f1,
        report.csmf_accuracy_mean_prob
    )
}
