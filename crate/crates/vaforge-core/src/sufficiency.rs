//! Information-sufficiency analysis.
//!
//! Interviewer-assigned sufficiency scores (1–5) are grouped into three
//! levels, predicted from each modality separately and from fused
//! features, and the two modalities' marginal contributions to the fused
//! accuracy are quantified. Feature influence is estimated with
//! permutation-sampled Shapley values (exact subset enumeration when the
//! feature count is small enough to afford it).

use crate::data::{CauseTaxonomy, Dataset, Level};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, NarrativeFeaturizer, NarrativeFeaturizerConfig, TabularEncoder};
use crate::fusion::{fuse_features, labels_for};
use crate::learners::{fit, FittedModel, LearnerKind, LearnerSpec};
use crate::linalg::DenseMatrix;
use crate::metrics::{accuracy, confusion};
use crate::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Feature counts up to this bound get exact Shapley enumeration; larger
/// models fall back to sampled permutations.
pub const EXACT_ENUMERATION_LIMIT: usize = 8;

/// Grouped information-sufficiency level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SufficiencyLevel {
    Low,
    Medium,
    High,
}

impl std::fmt::Display for SufficiencyLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SufficiencyLevel::Low => write!(f, "Low"),
            SufficiencyLevel::Medium => write!(f, "Medium"),
            SufficiencyLevel::High => write!(f, "High"),
        }
    }
}

/// Groups a 1–5 sufficiency score: 1–2 → Low, 3 → Medium, 4–5 → High.
pub fn group_sufficiency(score: u8) -> Result<SufficiencyLevel> {
    match score {
        1 | 2 => Ok(SufficiencyLevel::Low),
        3 => Ok(SufficiencyLevel::Medium),
        4 | 5 => Ok(SufficiencyLevel::High),
        other => Err(Error::Range {
            name: "sufficiency score".into(),
            value: other as f64,
            expected: "an integer in 1..=5".into(),
        }),
    }
}

/// Accuracy of each modality, the gain of fusing them, and how that gain
/// splits between the modalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    pub acc_narrative: f64,
    pub acc_question: f64,
    pub acc_multimodal: f64,
    /// `acc_multimodal − 0.5·(acc_narrative + acc_question)`.
    pub total_gain: f64,
    pub contrib_narrative_pct: f64,
    /// Defined as `100 − contrib_narrative_pct`, so the pair is exactly
    /// complementary.
    pub contrib_question_pct: f64,
}

/// Splits the fused-model gain between the modalities.
///
/// The narrative share is `0.5·(acc_multimodal − acc_question) /
/// total_gain × 100%` — half the improvement the narrative brings on top
/// of questions alone, normalized by the total gain — and the question
/// share is its complement.
pub fn marginal_contribution(
    acc_narrative: f64,
    acc_question: f64,
    acc_multimodal: f64,
) -> Result<ContributionReport> {
    for (name, value) in [
        ("acc_narrative", acc_narrative),
        ("acc_question", acc_question),
        ("acc_multimodal", acc_multimodal),
    ] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(Error::Range {
                name: name.into(),
                value,
                expected: "an accuracy in [0, 1]".into(),
            });
        }
    }
    let total_gain = acc_multimodal - 0.5 * (acc_narrative + acc_question);
    if total_gain == 0.0 {
        return Err(Error::DegenerateGain);
    }
    let contrib_narrative_pct = 0.5 * (acc_multimodal - acc_question) / total_gain * 100.0;
    Ok(ContributionReport {
        acc_narrative,
        acc_question,
        acc_multimodal,
        total_gain,
        contrib_narrative_pct,
        contrib_question_pct: 100.0 - contrib_narrative_pct,
    })
}

/// Re-labels scored records with their grouped sufficiency level.
///
/// Records without a sufficiency score are dropped. The taxonomy contains
/// only the observed levels (in Low < Medium < High order), so splits and
/// folds stratify correctly even when a level is absent.
pub fn sufficiency_dataset(ds: &Dataset) -> Result<Dataset> {
    let mut observed: Vec<SufficiencyLevel> = Vec::new();
    let mut records = Vec::new();
    for rec in ds.records() {
        let Some(score) = rec.sufficiency_score else {
            continue;
        };
        let level = group_sufficiency(score)?;
        if !observed.contains(&level) {
            observed.push(level);
        }
        let mut clone = rec.clone();
        clone.cause_icd10 = None;
        clone.cause_level1 = Some(level.to_string());
        clone.cause_level2 = None;
        clone.cause_level3 = None;
        records.push(clone);
    }
    if records.is_empty() {
        return Err(Error::DegenerateData(
            "no records carry a sufficiency score".into(),
        ));
    }
    observed.sort();
    let taxonomy = CauseTaxonomy::new(
        observed.iter().map(|l| l.to_string()).collect(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
    )?;
    Dataset::new(records, taxonomy, Level::L1)
}

/// Settings for the sufficiency-prediction pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyPipelineConfig {
    pub narrative: NarrativeFeaturizerConfig,
    pub narrative_spec: LearnerSpec,
    pub question_spec: LearnerSpec,
    pub multimodal_spec: LearnerSpec,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SufficiencyPipelineConfig {
    /// Logistic-regression models on all three branches, an 80/20 split,
    /// and default narrative featurization.
    pub fn new(seed: u64) -> Self {
        SufficiencyPipelineConfig {
            narrative: NarrativeFeaturizerConfig::default(),
            narrative_spec: LearnerSpec::new(LearnerKind::Logreg, seed),
            question_spec: LearnerSpec::new(LearnerKind::Logreg, seed),
            multimodal_spec: LearnerSpec::new(LearnerKind::Logreg, seed),
            test_fraction: 0.2,
            seed,
        }
    }
}

/// Pipeline output: hold-out accuracy per branch, plus the contribution
/// split when the total gain is nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyOutcome {
    pub n_train: usize,
    pub n_test: usize,
    pub acc_narrative: f64,
    pub acc_question: f64,
    pub acc_multimodal: f64,
    /// None when the gain is exactly zero, where the split is undefined.
    pub contribution: Option<ContributionReport>,
}

fn holdout_accuracy<F: Scalar>(
    spec: &LearnerSpec,
    x_train: &FeatureMatrix<F>,
    y_train: &[String],
    x_test: &FeatureMatrix<F>,
    y_test: &[String],
    classes: &[String],
) -> Result<f64> {
    let model = fit(spec, x_train, y_train)?;
    let probs = model.predict_proba(x_test)?;
    let predicted: Vec<String> = probs
        .predicted_classes()
        .into_iter()
        .map(str::to_string)
        .collect();
    let cm = confusion(y_test, &predicted, classes)?;
    Ok(accuracy::<f64>(&cm))
}

/// Predicts grouped sufficiency from narrative features, question
/// features, and their fusion, on a stratified hold-out split.
///
/// The narrative featurizer and tabular encoder are fitted on the
/// training side only.
pub fn predict_sufficiency_pipeline(
    ds: &Dataset,
    config: &SufficiencyPipelineConfig,
) -> Result<SufficiencyOutcome> {
    let suff_ds = sufficiency_dataset(ds)?;
    let plan = crate::data::stratified_split(&suff_ds, config.test_fraction, config.seed)?;
    let train = suff_ds.subset_by_ids(&plan.train_ids)?;
    let test = suff_ds.subset_by_ids(&plan.test_ids)?;
    let y_train = labels_for(&suff_ds, &plan.train_ids)?;
    let y_test = labels_for(&suff_ds, &plan.test_ids)?;

    let featurizer =
        NarrativeFeaturizer::<f64>::fit(train.records(), &config.narrative, config.seed)?;
    let text_train = featurizer.transform(train.records())?;
    let text_test = featurizer.transform(test.records())?;

    let encoder = TabularEncoder::fit(train.records());
    let tab_train = encoder.encode::<f64>(train.records())?;
    let tab_test = encoder.encode::<f64>(test.records())?;

    let fused_train = fuse_features(&text_train, &tab_train)?;
    let fused_test = fuse_features(&text_test, &tab_test)?;

    let classes = suff_ds.classes().to_vec();
    let acc_narrative = holdout_accuracy(
        &config.narrative_spec,
        &text_train,
        &y_train,
        &text_test,
        &y_test,
        &classes,
    )?;
    let acc_question = holdout_accuracy(
        &config.question_spec,
        &tab_train,
        &y_train,
        &tab_test,
        &y_test,
        &classes,
    )?;
    let acc_multimodal = holdout_accuracy(
        &config.multimodal_spec,
        &fused_train,
        &y_train,
        &fused_test,
        &y_test,
        &classes,
    )?;

    let contribution = match marginal_contribution(acc_narrative, acc_question, acc_multimodal) {
        Ok(report) => Some(report),
        Err(Error::DegenerateGain) => None,
        Err(other) => return Err(other),
    };
    Ok(SufficiencyOutcome {
        n_train: plan.train_ids.len(),
        n_test: plan.test_ids.len(),
        acc_narrative,
        acc_question,
        acc_multimodal,
        contribution,
    })
}

/// Shapley values of `f` at `x_row` against `baseline`, one per feature.
///
/// With at most [`EXACT_ENUMERATION_LIMIT`] features, all 2^n coalitions
/// are enumerated and the result is exact. Otherwise `n_samples` random
/// feature orderings are averaged; each ordering has its own RNG seeded
/// `seed + ordering index`, and orderings are evaluated in parallel but
/// reduced in a fixed order, so results are reproducible.
pub fn shapley_for_function<F, G>(
    f: G,
    x_row: &[F],
    baseline: &[F],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Scalar,
    G: Fn(&[F]) -> Result<f64> + Sync,
{
    if n_samples < 1 {
        return Err(Error::Range {
            name: "n_samples".into(),
            value: n_samples as f64,
            expected: "at least 1".into(),
        });
    }
    if x_row.len() != baseline.len() {
        return Err(Error::dim("shapley baseline", x_row.len(), baseline.len()));
    }
    let n = x_row.len();
    if n == 0 {
        return Ok(Vec::new());
    }

    let blend = |mask: usize| -> Vec<F> {
        (0..n)
            .map(|j| {
                if mask & (1 << j) != 0 {
                    x_row[j]
                } else {
                    baseline[j]
                }
            })
            .collect()
    };

    if n <= EXACT_ENUMERATION_LIMIT {
        let mut values = vec![0.0_f64; 1 << n];
        for (mask, slot) in values.iter_mut().enumerate() {
            *slot = f(&blend(mask))?;
        }
        let mut factorial = vec![1.0_f64; n + 1];
        for i in 1..=n {
            factorial[i] = factorial[i - 1] * i as f64;
        }
        let mut phi = vec![0.0_f64; n];
        for (j, phi_j) in phi.iter_mut().enumerate() {
            let bit = 1 << j;
            for mask in 0..values.len() {
                if mask & bit != 0 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                let weight = factorial[s] * factorial[n - s - 1] / factorial[n];
                *phi_j += weight * (values[mask | bit] - values[mask]);
            }
        }
        return Ok(phi);
    }

    let empty_value = f(&blend(0))?;
    let deltas: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(p as u64));
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut delta = vec![0.0_f64; n];
            let mut mask = 0usize;
            let mut prev = empty_value;
            for &j in &order {
                mask |= 1 << j;
                let value = f(&blend(mask))?;
                delta[j] = value - prev;
                prev = value;
            }
            Ok(delta)
        })
        .collect::<Result<_>>()?;
    let mut phi = vec![0.0_f64; n];
    for delta in &deltas {
        for (acc, d) in phi.iter_mut().zip(delta) {
            *acc += d;
        }
    }
    for acc in &mut phi {
        *acc /= n_samples as f64;
    }
    Ok(phi)
}

/// Shapley values for one row of a fitted model.
///
/// The explained quantity is the model's probability for the class it
/// predicts on the full row; features absent from a coalition take the
/// baseline value.
pub fn shapley_values_row<F: Scalar>(
    model: &FittedModel<F>,
    x: &FeatureMatrix<F>,
    row: usize,
    baseline: &[F],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let columns = x.columns().to_vec();
    let probe = |z: &[F]| -> Result<crate::prob::ProbMatrix<F>> {
        let matrix = DenseMatrix::from_rows(&[z.to_vec()])?;
        let features = FeatureMatrix::new(vec!["shapley-probe".to_string()], columns.clone(), matrix)?;
        model.predict_proba(&features)
    };
    let x_row = x.values().row(row).to_vec();
    let class_index = probe(&x_row)?.predicted_index(0);
    let value_fn = |z: &[F]| -> Result<f64> {
        let probs = probe(z)?;
        Ok(probs.values().get(0, class_index).to_f64_lossy())
    };
    shapley_for_function(value_fn, &x_row, baseline, n_samples, seed)
}

/// A feature's aggregate importance: mean |Shapley value| across rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs_shapley: f64,
    /// 1-based, descending importance; ties keep column order.
    pub rank: usize,
}

/// Feature-wise training means, the pinned default Shapley baseline.
pub fn mean_baseline<F: Scalar>(x: &FeatureMatrix<F>) -> Vec<F> {
    x.values().col_means()
}

/// Ranks features by mean |Shapley value| over all rows of `x`.
///
/// Rows are explained independently; row `r` uses seed
/// `seed + r·n_samples` so every sampled ordering in the report is
/// distinct and reproducible.
pub fn shapley_importance<F: Scalar>(
    model: &FittedModel<F>,
    x: &FeatureMatrix<F>,
    baseline: &[F],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>> {
    let n = x.n_cols();
    let mut totals = vec![0.0_f64; n];
    for row in 0..x.n_rows() {
        let row_seed = seed.wrapping_add((row as u64).wrapping_mul(n_samples.max(1) as u64));
        let values = shapley_values_row(model, x, row, baseline, n_samples, row_seed)?;
        for (total, v) in totals.iter_mut().zip(&values) {
            *total += v.abs();
        }
    }
    let n_rows = x.n_rows().max(1) as f64;
    let means: Vec<f64> = totals.iter().map(|t| t / n_rows).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let mut report: Vec<FeatureImportance> = order
        .iter()
        .enumerate()
        .map(|(rank, &col)| FeatureImportance {
            feature: x.columns()[col].clone(),
            mean_abs_shapley: means[col],
            rank: rank + 1,
        })
        .collect();
    report.sort_by_key(|f| f.rank);
    Ok(report)
}

/// Writes an importance report as CSV: `feature,mean_abs_shapley,rank`.
pub fn write_importance_csv(path: &Path, report: &[FeatureImportance]) -> Result<()> {
    let mut out = String::from("feature,mean_abs_shapley,rank\n");
    for item in report {
        out.push_str(&format!(
            "{},{},{}\n",
            item.feature, item.mean_abs_shapley, item.rank
        ));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
