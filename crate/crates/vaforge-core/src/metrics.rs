//! Individual- and population-level evaluation.
//!
//! Individual metrics come from the confusion matrix: per-class precision,
//! recall, and F1 with the 0/0 → 0 convention, aggregated as weighted,
//! macro, or micro averages. Population metrics compare cause-specific
//! mortality fractions (CSMF): the chance-corrected CSMF accuracy rescales
//! agreement so that random allocation scores zero.
//!
//! Two identities are kept bitwise-exact by construction, not merely to
//! rounding: micro-F1 equals accuracy, and weighted recall equals accuracy
//! (both are algebraically the pooled ratio of correct predictions over
//! total, so they are computed from pooled integer counts rather than by
//! reaggregating per-class floating-point ratios).

use crate::error::{Error, Result};
use crate::prob::ProbMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Expected CSMF accuracy of random cause allocation, used as the chance
/// floor when computing the chance-corrected variant.
pub const CSMF_CHANCE: f64 = 0.632;

/// A C×C contingency table of true versus predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    /// Row-major counts; rows are true classes, columns predicted.
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    /// Class labels indexing rows and columns.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// The count of records with true class `i` predicted as class `j`.
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.classes.len() + j]
    }

    /// Total number of evaluated records.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Correctly classified records (the diagonal sum).
    pub fn diagonal(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.count(i, i)).sum()
    }

    /// Writes the matrix as CSV: header `class,<classes...>`, one row per
    /// true class.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["class".to_string()];
        header.extend(self.classes.iter().cloned());
        writer.write_record(&header)?;
        for (i, class) in self.classes.iter().enumerate() {
            let mut row = vec![class.clone()];
            row.extend((0..self.classes.len()).map(|j| self.count(i, j).to_string()));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Tallies true/predicted label pairs against an ordered class list.
pub fn confusion(
    true_labels: &[String],
    pred_labels: &[String],
    classes: &[String],
) -> Result<ConfusionMatrix> {
    if true_labels.len() != pred_labels.len() {
        return Err(Error::Alignment(format!(
            "true labels ({}) and predictions ({}) disagree",
            true_labels.len(),
            pred_labels.len()
        )));
    }
    let position: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let c = classes.len();
    let mut counts = vec![0u64; c * c];
    for (t, p) in true_labels.iter().zip(pred_labels.iter()) {
        let ti = *position
            .get(t.as_str())
            .ok_or_else(|| Error::Label(format!("true label {t:?} not in class list")))?;
        let pi = *position
            .get(p.as_str())
            .ok_or_else(|| Error::Label(format!("predicted label {p:?} not in class list")))?;
        counts[ti * c + pi] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// Per-class counts and derived precision/recall/F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<F> {
    pub class: String,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub support: u64,
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

/// 0/0 → 0; otherwise the ratio.
fn safe_ratio<F: Scalar>(num: u64, den: u64) -> F {
    if den == 0 {
        F::zero()
    } else {
        F::c(num as f64) / F::c(den as f64)
    }
}

/// Harmonic mean of precision and recall with the 0/0 → 0 convention.
///
/// Equal inputs short-circuit to the shared value, which keeps micro-F1
/// bitwise equal to micro-precision when the pooled ratios coincide.
fn f1_of<F: Scalar>(p: F, r: F) -> F {
    if p == r {
        p
    } else if p + r > F::zero() {
        F::c(2.0) * p * r / (p + r)
    } else {
        F::zero()
    }
}

/// Precision, recall, F1, and support for every class in the matrix.
pub fn per_class_prf<F: Scalar>(cm: &ConfusionMatrix) -> Vec<ClassMetrics<F>> {
    let c = cm.classes().len();
    (0..c)
        .map(|i| {
            let tp = cm.count(i, i);
            let fp: u64 = (0..c).filter(|&t| t != i).map(|t| cm.count(t, i)).sum();
            let fn_: u64 = (0..c).filter(|&p| p != i).map(|p| cm.count(i, p)).sum();
            let precision = safe_ratio(tp, tp + fp);
            let recall = safe_ratio(tp, tp + fn_);
            ClassMetrics {
                class: cm.classes()[i].clone(),
                true_positives: tp,
                false_positives: fp,
                false_negatives: fn_,
                support: tp + fn_,
                precision,
                recall,
                f1: f1_of(precision, recall),
            }
        })
        .collect()
}

/// How per-class metrics are combined into one scalar per metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    Weighted,
    Macro,
    Micro,
}

/// Aggregated precision, recall, and F1 under one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

/// Combines per-class metrics.
///
/// Weighted averages by class support; macro is the unweighted mean; micro
/// pools the counts before forming ratios. Weighted recall is computed from
/// pooled counts too — Σ (nᵢ/N)·(TPᵢ/nᵢ) = ΣTP/N algebraically, and the
/// pooled form keeps it exactly equal to accuracy.
pub fn aggregate<F: Scalar>(per_class: &[ClassMetrics<F>], mode: AggregateMode) -> Aggregate<F> {
    let tp_sum: u64 = per_class.iter().map(|m| m.true_positives).sum();
    let fp_sum: u64 = per_class.iter().map(|m| m.false_positives).sum();
    let fn_sum: u64 = per_class.iter().map(|m| m.false_negatives).sum();
    let n: u64 = per_class.iter().map(|m| m.support).sum();
    match mode {
        AggregateMode::Weighted => {
            let mut precision = F::zero();
            let mut f1 = F::zero();
            if n > 0 {
                let n_f = F::c(n as f64);
                for m in per_class {
                    let w = F::c(m.support as f64) / n_f;
                    precision += w * m.precision;
                    f1 += w * m.f1;
                }
            }
            Aggregate {
                precision,
                recall: safe_ratio(tp_sum, n),
                f1,
            }
        }
        AggregateMode::Macro => {
            let c = F::c(per_class.len().max(1) as f64);
            let mut precision = F::zero();
            let mut recall = F::zero();
            let mut f1 = F::zero();
            for m in per_class {
                precision += m.precision;
                recall += m.recall;
                f1 += m.f1;
            }
            Aggregate {
                precision: precision / c,
                recall: recall / c,
                f1: f1 / c,
            }
        }
        AggregateMode::Micro => {
            let precision = safe_ratio(tp_sum, tp_sum + fp_sum);
            let recall = safe_ratio(tp_sum, tp_sum + fn_sum);
            Aggregate {
                precision,
                recall,
                f1: f1_of(precision, recall),
            }
        }
    }
}

/// Fraction of records on the confusion diagonal.
pub fn accuracy<F: Scalar>(cm: &ConfusionMatrix) -> F {
    safe_ratio(cm.diagonal(), cm.total())
}

/// A cause-specific mortality fraction distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsmfVector<F> {
    classes: Vec<String>,
    fractions: Vec<F>,
}

impl<F: Scalar> CsmfVector<F> {
    /// Builds a distribution, validating nonnegativity and a sum within
    /// 1e-9 of one.
    pub fn new(classes: Vec<String>, fractions: Vec<F>) -> Result<Self> {
        if classes.len() != fractions.len() {
            return Err(Error::dim("csmf entries", classes.len(), fractions.len()));
        }
        let mut sum = F::zero();
        for &f in &fractions {
            if !f.is_finite() || f < F::zero() {
                return Err(Error::NonFinite(format!(
                    "csmf fraction {f} is negative or non-finite"
                )));
            }
            sum += f;
        }
        if (sum.to_f64_lossy() - 1.0).abs() > 1e-9 {
            return Err(Error::Degenerate(format!(
                "csmf fractions sum to {sum}, not 1"
            )));
        }
        Ok(CsmfVector { classes, fractions })
    }

    /// Class labels.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Per-class fractions, aligned with the class list.
    pub fn fractions(&self) -> &[F] {
        &self.fractions
    }

    /// The empirical distribution of a label sequence over `classes`.
    pub fn from_labels(labels: &[String], classes: &[String]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Degenerate(
                "cannot form a csmf from zero records".into(),
            ));
        }
        let position: BTreeMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut counts = vec![0u64; classes.len()];
        for label in labels {
            let i = *position
                .get(label.as_str())
                .ok_or_else(|| Error::Label(format!("label {label:?} not in class list")))?;
            counts[i] += 1;
        }
        let n = F::c(labels.len() as f64);
        let fractions = counts.iter().map(|&c| F::c(c as f64) / n).collect();
        CsmfVector::new(classes.to_vec(), fractions)
    }
}

/// How predicted probabilities are reduced to a population distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsmfMode {
    /// Column means of the full probability rows (the default).
    MeanProb,
    /// Normalized counts of per-record argmax causes.
    TopCause,
}

/// The predicted cause distribution of a population.
///
/// Mean-probability mode renormalizes the column means (rows may carry up to
/// the probability-matrix tolerance each) so the result is an exact simplex.
pub fn csmf<F: Scalar>(pred: &ProbMatrix<F>, mode: CsmfMode) -> Result<CsmfVector<F>> {
    if pred.n_rows() == 0 {
        return Err(Error::Degenerate(
            "cannot form a csmf from zero records".into(),
        ));
    }
    let fractions = match mode {
        CsmfMode::MeanProb => {
            let mut means = pred.mean_probabilities();
            let sum: F = means.iter().copied().sum();
            for m in &mut means {
                *m /= sum;
            }
            means
        }
        CsmfMode::TopCause => {
            let mut counts = vec![0u64; pred.n_classes()];
            for r in 0..pred.n_rows() {
                counts[pred.predicted_index(r)] += 1;
            }
            let n = F::c(pred.n_rows() as f64);
            counts.iter().map(|&c| F::c(c as f64) / n).collect()
        }
    };
    CsmfVector::new(pred.classes().to_vec(), fractions)
}

/// CSMF accuracy: 1 − Σ|trueᵢ − predᵢ| / (2·(1 − minᵢ trueᵢ)).
///
/// Errors when the true distribution puts all mass on one cause, which
/// zeroes the denominator.
pub fn csmf_accuracy<F: Scalar>(true_csmf: &CsmfVector<F>, pred_csmf: &CsmfVector<F>) -> Result<F> {
    if true_csmf.classes() != pred_csmf.classes() {
        return Err(Error::Alignment(format!(
            "csmf classes disagree: {:?} vs {:?}",
            true_csmf.classes(),
            pred_csmf.classes()
        )));
    }
    let min_true = true_csmf
        .fractions()
        .iter()
        .copied()
        .fold(F::infinity(), F::min);
    let denom = F::c(2.0) * (F::one() - min_true);
    if denom <= F::zero() {
        return Err(Error::Degenerate(
            "true csmf puts all mass on a single cause".into(),
        ));
    }
    let mut abs_diff = F::zero();
    for (&t, &p) in true_csmf.fractions().iter().zip(pred_csmf.fractions()) {
        abs_diff += (t - p).abs();
    }
    Ok(F::one() - abs_diff / denom)
}

/// Chance-corrected CSMF accuracy: (x − chance) / (1 − chance).
///
/// Negative values mean worse than random allocation. Use [`CSMF_CHANCE`]
/// for the standard chance floor.
pub fn cccsmf_accuracy<F: Scalar>(csmf_acc: F, chance: F) -> F {
    (csmf_acc - chance) / (F::one() - chance)
}

/// Everything the pipeline reports about one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<F> {
    pub n_records: usize,
    pub classes: Vec<String>,
    pub accuracy: F,
    pub weighted: Aggregate<F>,
    #[serde(rename = "macro")]
    pub macro_avg: Aggregate<F>,
    pub micro: Aggregate<F>,
    pub per_class: Vec<ClassMetrics<F>>,
    pub true_csmf: Vec<F>,
    pub pred_csmf_mean_prob: Vec<F>,
    pub pred_csmf_top_cause: Vec<F>,
    pub csmf_accuracy_mean_prob: F,
    pub csmf_accuracy_top_cause: F,
    pub cccsmf_accuracy_mean_prob: F,
    pub cccsmf_accuracy_top_cause: F,
}

impl<F: Scalar + Serialize> MetricReport<F> {
    /// Writes the report as pretty JSON with a trailing newline.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }
}

/// Scores predicted probabilities against true labels, producing the full
/// report plus the confusion matrix.
///
/// The class list comes from the prediction matrix; every true label must
/// appear in it.
pub fn evaluate<F: Scalar>(
    true_labels: &[String],
    pred: &ProbMatrix<F>,
) -> Result<(MetricReport<F>, ConfusionMatrix)> {
    let classes = pred.classes().to_vec();
    let pred_labels: Vec<String> = pred
        .predicted_classes()
        .into_iter()
        .map(str::to_string)
        .collect();
    let cm = confusion(true_labels, &pred_labels, &classes)?;
    let per_class = per_class_prf::<F>(&cm);
    let true_csmf = CsmfVector::from_labels(true_labels, &classes)?;
    let csmf_mean = csmf(pred, CsmfMode::MeanProb)?;
    let csmf_top = csmf(pred, CsmfMode::TopCause)?;
    let acc_mean = csmf_accuracy(&true_csmf, &csmf_mean)?;
    let acc_top = csmf_accuracy(&true_csmf, &csmf_top)?;
    let chance = F::c(CSMF_CHANCE);
    let report = MetricReport {
        n_records: true_labels.len(),
        classes,
        accuracy: accuracy(&cm),
        weighted: aggregate(&per_class, AggregateMode::Weighted),
        macro_avg: aggregate(&per_class, AggregateMode::Macro),
        micro: aggregate(&per_class, AggregateMode::Micro),
        per_class,
        true_csmf: true_csmf.fractions().to_vec(),
        pred_csmf_mean_prob: csmf_mean.fractions().to_vec(),
        pred_csmf_top_cause: csmf_top.fractions().to_vec(),
        csmf_accuracy_mean_prob: acc_mean,
        csmf_accuracy_top_cause: acc_top,
        cccsmf_accuracy_mean_prob: cccsmf_accuracy(acc_mean, chance),
        cccsmf_accuracy_top_cause: cccsmf_accuracy(acc_top, chance),
    };
    Ok((report, cm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn confusion_enumeration_example() {
        let classes = labels(&["A", "B"]);
        let cm = confusion(&labels(&["A", "A", "B"]), &labels(&["A", "B", "B"]), &classes).unwrap();
        assert_eq!(cm.count(0, 0), 1);
        assert_eq!(cm.count(0, 1), 1);
        assert_eq!(cm.count(1, 0), 0);
        assert_eq!(cm.count(1, 1), 1);
        assert_eq!(cm.total(), 3);
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let classes = labels(&["A", "B", "C"]);
        let t = labels(&["A", "B", "C", "B"]);
        let cm = confusion(&t, &t, &classes).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(cm.count(i, j), 0);
                }
            }
        }
        assert_eq!(cm.diagonal(), 4);
        assert_eq!(accuracy::<f64>(&cm), 1.0);
    }

    #[test]
    fn empty_input_gives_zero_matrix() {
        let classes = labels(&["A", "B"]);
        let cm = confusion(&[], &[], &classes).unwrap();
        assert_eq!(cm.total(), 0);
        assert_eq!(accuracy::<f64>(&cm), 0.0);
    }

    #[test]
    fn unknown_labels_are_rejected() {
        let classes = labels(&["A", "B"]);
        assert!(matches!(
            confusion(&labels(&["Z"]), &labels(&["A"]), &classes),
            Err(Error::Label(_))
        ));
        assert!(matches!(
            confusion(&labels(&["A"]), &labels(&["Z"]), &classes),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn prf_direct_formula_example() {
        // True [A,B], pred [A,A]: class A has TP=1, FP=1, FN=0.
        let classes = labels(&["A", "B"]);
        let cm = confusion(&labels(&["A", "B"]), &labels(&["A", "A"]), &classes).unwrap();
        let prf = per_class_prf::<f64>(&cm);
        assert_eq!(prf[0].true_positives, 1);
        assert_eq!(prf[0].false_positives, 1);
        assert_eq!(prf[0].false_negatives, 0);
        assert_eq!(prf[0].precision, 0.5);
        assert_eq!(prf[0].recall, 1.0);
        assert!((prf[0].f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn absent_class_scores_zero() {
        let classes = labels(&["A", "B", "Ghost"]);
        let cm = confusion(&labels(&["A", "B"]), &labels(&["A", "B"]), &classes).unwrap();
        let prf = per_class_prf::<f64>(&cm);
        assert_eq!(prf[2].support, 0);
        assert_eq!(prf[2].precision, 0.0);
        assert_eq!(prf[2].recall, 0.0);
        assert_eq!(prf[2].f1, 0.0);
    }

    #[test]
    fn weighted_and_macro_aggregate_example() {
        // Class A perfect (support 3), class B fully wrong (support 1):
        // true [A,A,A,B], pred [A,A,A,A].
        let classes = labels(&["A", "B"]);
        let cm = confusion(
            &labels(&["A", "A", "A", "B"]),
            &labels(&["A", "A", "A", "A"]),
            &classes,
        )
        .unwrap();
        let prf = per_class_prf::<f64>(&cm);
        assert_eq!(prf[0].f1, 0.8571428571428571); // 2·(3/4)·1/(3/4+1)
        assert_eq!(prf[1].f1, 0.0);

        // Constancy: all classes identical metric → every mode returns it.
        let same: Vec<ClassMetrics<f64>> = vec![
            ClassMetrics {
                class: "A".into(),
                true_positives: 2,
                false_positives: 0,
                false_negatives: 0,
                support: 2,
                precision: 0.75,
                recall: 0.75,
                f1: 0.75,
            },
            ClassMetrics {
                class: "B".into(),
                true_positives: 2,
                false_positives: 0,
                false_negatives: 0,
                support: 2,
                precision: 0.75,
                recall: 0.75,
                f1: 0.75,
            },
        ];
        for mode in [AggregateMode::Weighted, AggregateMode::Macro] {
            let agg = aggregate(&same, mode);
            assert!((agg.precision - 0.75).abs() < 1e-15);
            assert!((agg.f1 - 0.75).abs() < 1e-15);
        }

        // F1 (1.0, 0.0) with supports (3,1) → weighted 0.75, macro 0.5.
        let mixed: Vec<ClassMetrics<f64>> = vec![
            ClassMetrics {
                class: "A".into(),
                true_positives: 3,
                false_positives: 0,
                false_negatives: 0,
                support: 3,
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            },
            ClassMetrics {
                class: "B".into(),
                true_positives: 0,
                false_positives: 0,
                false_negatives: 1,
                support: 1,
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            },
        ];
        assert_eq!(aggregate(&mixed, AggregateMode::Weighted).f1, 0.75);
        assert_eq!(aggregate(&mixed, AggregateMode::Macro).f1, 0.5);
    }

    #[test]
    fn micro_f1_and_weighted_recall_equal_accuracy_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let classes = labels(&["c0", "c1", "c2", "c3", "c4"]);
        for _ in 0..20 {
            let n = rng.random_range(3..60);
            let t: Vec<String> = (0..n)
                .map(|_| classes[rng.random_range(0..5)].clone())
                .collect();
            let p: Vec<String> = (0..n)
                .map(|_| classes[rng.random_range(0..5)].clone())
                .collect();
            let cm = confusion(&t, &p, &classes).unwrap();
            let prf = per_class_prf::<f64>(&cm);
            let acc: f64 = accuracy(&cm);
            let micro = aggregate(&prf, AggregateMode::Micro);
            let weighted = aggregate(&prf, AggregateMode::Weighted);
            assert_eq!(micro.precision, acc);
            assert_eq!(micro.recall, acc);
            assert_eq!(micro.f1, acc);
            assert_eq!(weighted.recall, acc);
        }
    }

    fn prob(rows: &[Vec<f64>], classes: &[&str]) -> ProbMatrix<f64> {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        ProbMatrix::new(
            ids,
            labels(classes),
            DenseMatrix::from_rows(rows).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn csmf_modes_match_examples() {
        let p = prob(&[vec![1.0, 0.0], vec![0.0, 1.0]], &["A", "B"]);
        for mode in [CsmfMode::MeanProb, CsmfMode::TopCause] {
            let v = csmf(&p, mode).unwrap();
            assert_eq!(v.fractions(), &[0.5, 0.5]);
        }

        let p = prob(&[vec![0.6, 0.4], vec![0.6, 0.4]], &["A", "B"]);
        let mean = csmf(&p, CsmfMode::MeanProb).unwrap();
        assert!((mean.fractions()[0] - 0.6).abs() < 1e-12);
        let top = csmf(&p, CsmfMode::TopCause).unwrap();
        assert_eq!(top.fractions(), &[1.0, 0.0]);

        let p = prob(&[vec![0.3, 0.7]], &["A", "B"]);
        let single = csmf(&p, CsmfMode::MeanProb).unwrap();
        assert!((single.fractions()[0] - 0.3).abs() < 1e-12);
        assert!((single.fractions()[1] - 0.7).abs() < 1e-12);
    }

    fn csmf_vec(fracs: &[f64]) -> CsmfVector<f64> {
        let classes: Vec<String> = (0..fracs.len()).map(|i| format!("c{i}")).collect();
        CsmfVector::new(classes, fracs.to_vec()).unwrap()
    }

    #[test]
    fn csmf_accuracy_identity_is_one() {
        let t = csmf_vec(&[0.5, 0.3, 0.2]);
        assert_eq!(csmf_accuracy(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn csmf_accuracy_pinned_example_is_bitwise_exact() {
        let t = csmf_vec(&[0.5, 0.3, 0.2]);
        let p = csmf_vec(&[0.4, 0.4, 0.2]);
        let acc = csmf_accuracy(&t, &p).unwrap();
        assert_eq!(acc, 0.875);
    }

    #[test]
    fn csmf_accuracy_extremes() {
        let t = csmf_vec(&[0.5, 0.5, 0.0]);
        // All predicted mass on the minimum-true cause: the floor, 0.
        let floor = csmf_accuracy(&t, &csmf_vec(&[0.0, 0.0, 1.0])).unwrap();
        assert!(floor.abs() < 1e-15);
        // All predicted mass on one majority cause: halfway, 0.5.
        let half = csmf_accuracy(&t, &csmf_vec(&[1.0, 0.0, 0.0])).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_cause_population_is_degenerate() {
        let t = CsmfVector::new(vec!["only".to_string()], vec![1.0]).unwrap();
        assert!(matches!(
            csmf_accuracy(&t, &t),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn cccsmf_pinned_points() {
        assert_eq!(cccsmf_accuracy(0.632, CSMF_CHANCE), 0.0);
        assert_eq!(cccsmf_accuracy(1.0, CSMF_CHANCE), 1.0);
        assert!((cccsmf_accuracy(0.875, CSMF_CHANCE) - 0.6603).abs() < 1e-4);
        assert!(cccsmf_accuracy(0.3, CSMF_CHANCE) < 0.0);
    }

    #[test]
    fn class_permutation_leaves_metrics_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let order_a = ["x", "y", "z"];
        let order_b = ["z", "x", "y"];
        let t: Vec<String> = (0..40)
            .map(|_| order_a[rng.random_range(0..3)].to_string())
            .collect();
        let p: Vec<String> = (0..40)
            .map(|_| order_a[rng.random_range(0..3)].to_string())
            .collect();
        let cm_a = confusion(&t, &p, &labels(&order_a)).unwrap();
        let cm_b = confusion(&t, &p, &labels(&order_b)).unwrap();
        let prf_a = per_class_prf::<f64>(&cm_a);
        let prf_b = per_class_prf::<f64>(&cm_b);
        // Pooled-count metrics are exactly invariant.
        assert_eq!(accuracy::<f64>(&cm_a), accuracy::<f64>(&cm_b));
        let (ma, mb) = (
            aggregate(&prf_a, AggregateMode::Micro),
            aggregate(&prf_b, AggregateMode::Micro),
        );
        assert_eq!(ma, mb);
        // Reaggregated metrics are invariant up to summation order.
        for mode in [AggregateMode::Weighted, AggregateMode::Macro] {
            let (aa, ab) = (aggregate(&prf_a, mode), aggregate(&prf_b, mode));
            assert!((aa.precision - ab.precision).abs() < 1e-12);
            assert!((aa.recall - ab.recall).abs() < 1e-12);
            assert!((aa.f1 - ab.f1).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_produces_full_report() {
        let p = prob(
            &[
                vec![0.8, 0.1, 0.1],
                vec![0.2, 0.7, 0.1],
                vec![0.3, 0.3, 0.4],
                vec![0.6, 0.2, 0.2],
            ],
            &["A", "B", "C"],
        );
        let t = labels(&["A", "B", "C", "B"]);
        let (report, cm) = evaluate(&t, &p).unwrap();
        assert_eq!(report.n_records, 4);
        assert_eq!(report.accuracy, 0.75);
        assert_eq!(cm.total(), 4);
        assert_eq!(report.micro.f1, report.accuracy);
        assert_eq!(report.weighted.recall, report.accuracy);
        assert_eq!(report.per_class.len(), 3);
        assert!((report.true_csmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_json_and_confusion_csv_round_trip() {
        let p = prob(&[vec![0.9, 0.1], vec![0.2, 0.8]], &["A", "B"]);
        let t = labels(&["A", "B"]);
        let (report, cm) = evaluate(&t, &p).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("report.json");
        report.write_json(&json_path).unwrap();
        let raw = std::fs::read_to_string(&json_path).unwrap();
        let back: MetricReport<f64> = serde_json::from_str(&raw).unwrap();
        assert_eq!(back, report);

        let csv_path = dir.path().join("confusion.csv");
        cm.to_csv(&csv_path).unwrap();
        let raw = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(raw, "class,A,B\nA,1,0\nB,0,1\n");
    }

    #[test]
    fn csmf_vector_validation() {
        assert!(CsmfVector::new(vec!["a".into()], vec![0.5]).is_err());
        assert!(CsmfVector::new(vec!["a".into(), "b".into()], vec![0.5, -0.5]).is_err());
        assert!(CsmfVector::new(vec!["a".into(), "b".into()], vec![0.5]).is_err());
    }
}
