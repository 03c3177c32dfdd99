//! `sensitivity`: training-size curve over a fixed hold-out test set.
//!
//! The training split is subsampled (stratified) to 10%, 20%, … 90%, and
//! 100%; the model is refit from scratch — featurizers included — at each
//! fraction and scored on the identical test records.

use crate::config::RunConfig;
use crate::io::{ensure_out_dir, fmt_f64, load_inputs, write_csv};
use anyhow::{Context, Result};
use vaforge_core::data::{stratified_split, subsample_training};
use vaforge_core::fusion::labels_for;
use vaforge_core::metrics::evaluate;
use crate::pipeline::{fit_and_predict, Featurizer};

/// The fractions of the training set evaluated, in order.
pub fn sensitivity_fractions() -> Vec<f64> {
    let mut fractions: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    fractions.push(1.0);
    fractions
}

/// Writes `sensitivity.csv` with one row per training fraction.
pub fn cmd_sensitivity(config: &RunConfig) -> Result<()> {
    let entry = config.entry_named(None)?.clone();
    let out = ensure_out_dir(config)?;
    let data = load_inputs(config)?;
    let plan = stratified_split(&data.dataset, config.split.test_fraction, config.split.seed)?;
    let full_train = data.dataset.subset_by_ids(&plan.train_ids)?;
    let test = data.dataset.subset_by_ids(&plan.test_ids)?;

    let mut rows = Vec::new();
    for fraction in sensitivity_fractions() {
        let train = subsample_training(&full_train, fraction, config.split.seed)
            .with_context(|| format!("subsampling the training set to {fraction}"))?;
        let mut featurizer = Featurizer::new(&train, &test, config, &data.table);
        let y_train = {
            let ids = featurizer.bundle(entry.features)?.train.ids().to_vec();
            labels_for(&train, &ids)?
        };
        let (_, probs) = fit_and_predict(&entry, &mut featurizer, &y_train)?;
        let truth = labels_for(&data.dataset, probs.ids())?;
        let (report, _) = evaluate(&truth, &probs)?;
        rows.push(vec![
            fmt_f64(fraction),
            train.len().to_string(),
            fmt_f64(report.accuracy),
            fmt_f64(report.weighted.f1),
            fmt_f64(report.csmf_accuracy_mean_prob),
        ]);
        println!(
            "sensitivity: fraction={} n_train={} accuracy={}",
            rows.last().unwrap()[0],
            rows.last().unwrap()[1],
            rows.last().unwrap()[2]
        );
    }
    write_csv(
        &out.join("sensitivity.csv"),
        &["fraction", "n_train", "accuracy", "weighted_f1", "csmf_accuracy"],
        &rows,
    )?;
    Ok(())
}
