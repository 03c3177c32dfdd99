//! Stratified train/test splitting, k-fold cross-validation, and stratified
//! subsampling.
//!
//! All three operations stratify by the cause label at the dataset's working
//! level and are deterministic given a seed: record indices are shuffled
//! within each class by a seeded generator (classes visited in taxonomy
//! order) and then sliced contiguously. Records without a label at the
//! working level are excluded from splits but remain available in the parent
//! dataset for prediction-only use.

use super::Dataset;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A train/test partition of the labeled record ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// One cross-validation fold over the labeled record ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
}

/// Labeled record positions grouped by class, in taxonomy class order.
///
/// Errors if any taxonomy class at the working level has no labeled records,
/// since stratification over that class would be impossible.
fn indices_by_class(ds: &Dataset, context: &str) -> Result<Vec<Vec<usize>>> {
    let classes = ds.classes();
    if classes.is_empty() {
        return Err(Error::DegenerateData(format!(
            "taxonomy has no classes at level {} ({context})",
            ds.label_level()
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, rec) in ds.records().iter().enumerate() {
        if let Some(c) = ds.class_of(rec) {
            by_class[c].push(i);
        }
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::EmptyClass {
                class: classes[c].clone(),
                context: context.to_string(),
            });
        }
    }
    Ok(by_class)
}

fn ids_sorted_by_position(ds: &Dataset, mut indices: Vec<usize>) -> Vec<String> {
    indices.sort_unstable();
    indices
        .into_iter()
        .map(|i| ds.records()[i].id.clone())
        .collect()
}

/// Splits the labeled records into train and test sets, preserving class
/// proportions within one record per class.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Range {
            name: "test_fraction".into(),
            value: test_fraction,
            expected: "the open interval (0, 1)".into(),
        });
    }
    let by_class = indices_by_class(ds, "stratified split")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut members in by_class {
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        let n_test = n_test.min(members.len());
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    Ok(SplitPlan {
        train_ids: ids_sorted_by_position(ds, train),
        test_ids: ids_sorted_by_position(ds, test),
        seed,
        test_fraction,
    })
}

/// Partitions the labeled records into `k` stratified cross-validation folds.
///
/// Every labeled record validates in exactly one fold, and per-class fold
/// sizes differ by at most one: the first `n mod k` folds receive the extra
/// record of each class.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Fold(format!("k must be at least 2, got {k}")));
    }
    let by_class = indices_by_class(ds, "stratified k-fold")?;
    let classes = ds.classes();
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::Fold(format!(
                "class {:?} has {} records, fewer than k = {k}",
                classes[c],
                members.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut val_indices: Vec<Vec<usize>> = vec![Vec::new(); k];
    for mut members in by_class {
        members.shuffle(&mut rng);
        let base = members.len() / k;
        let extra = members.len() % k;
        let mut start = 0;
        for (f, fold) in val_indices.iter_mut().enumerate() {
            let size = base + usize::from(f < extra);
            fold.extend_from_slice(&members[start..start + size]);
            start += size;
        }
    }
    let all_labeled = ds.labeled_indices();
    Ok(val_indices
        .into_iter()
        .map(|val| {
            let train: Vec<usize> = all_labeled
                .iter()
                .copied()
                .filter(|i| !val.contains(i))
                .collect();
            Fold {
                train_ids: ids_sorted_by_position(ds, train),
                val_ids: ids_sorted_by_position(ds, val),
            }
        })
        .collect())
}

/// Draws a stratified subsample of the labeled records.
///
/// Per-class counts are `round(class_size * fraction)`, clamped to at least
/// one record so no class disappears. `fraction = 1.0` returns the dataset
/// unchanged (including unlabeled records); smaller fractions keep labeled
/// records only, in their original order. Subsamples at different fractions
/// are drawn independently and need not nest.
pub fn subsample_training(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Range {
            name: "fraction".into(),
            value: fraction,
            expected: "the half-open interval (0, 1]".into(),
        });
    }
    if fraction == 1.0 {
        return Ok(ds.clone());
    }
    let by_class = indices_by_class(ds, "stratified subsample")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for mut members in by_class {
        members.shuffle(&mut rng);
        let count = ((members.len() as f64 * fraction).round() as usize)
            .max(1)
            .min(members.len());
        keep.extend_from_slice(&members[..count]);
    }
    let ids = ids_sorted_by_position(ds, keep);
    ds.subset_by_ids(&ids)
}
