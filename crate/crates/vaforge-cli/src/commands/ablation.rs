//! `ablation`: score the full soft-vote ensemble and every leave-one-out
//! subset, with deltas against the full ensemble.

use super::ensemble::load_prediction_sources;
use crate::config::RunConfig;
use crate::error::validation;
use crate::io::{ensure_out_dir, fmt_f64, load_inputs, write_csv};
use anyhow::Result;
use vaforge_core::data::Dataset;
use vaforge_core::fusion::{labels_for, soft_vote};
use vaforge_core::metrics::evaluate;
use vaforge_core::prob::ProbMatrix;

struct Scores {
    accuracy: f64,
    weighted_f1: f64,
    csmf_accuracy: f64,
}

fn score_subset(dataset: &Dataset, members: &[&ProbMatrix<f64>]) -> Result<Scores> {
    let owned: Vec<ProbMatrix<f64>> = members.iter().map(|m| (*m).clone()).collect();
    let (voted, _) = soft_vote(&owned)?;
    let truth = labels_for(dataset, voted.ids())?;
    let (report, _) = evaluate(&truth, &voted)?;
    Ok(Scores {
        accuracy: report.accuracy,
        weighted_f1: report.weighted.f1,
        csmf_accuracy: report.csmf_accuracy_mean_prob,
    })
}

/// Writes `ablation.csv`: the `all` row plus one `minus-<name>` row per
/// source, each with metric deltas relative to `all`.
pub fn cmd_ablation(config: &RunConfig) -> Result<()> {
    let settings = config
        .ensemble
        .as_ref()
        .ok_or_else(|| validation("ablation command needs an \"ensemble\" config section"))?;
    if settings.predictions.len() < 2 {
        return Err(validation("ablation needs at least two prediction files").into());
    }
    let out = ensure_out_dir(config)?;
    let data = load_inputs(config)?;
    let sources = load_prediction_sources(settings)?;

    let all_refs: Vec<&ProbMatrix<f64>> = sources.iter().map(|(_, m)| m).collect();
    let baseline = score_subset(&data.dataset, &all_refs)?;

    let mut rows = Vec::new();
    let mut emit = |row_name: &str, n_models: usize, s: &Scores| {
        rows.push(vec![
            row_name.to_string(),
            n_models.to_string(),
            fmt_f64(s.accuracy),
            fmt_f64(s.weighted_f1),
            fmt_f64(s.csmf_accuracy),
            fmt_f64(s.accuracy - baseline.accuracy),
            fmt_f64(s.weighted_f1 - baseline.weighted_f1),
            fmt_f64(s.csmf_accuracy - baseline.csmf_accuracy),
        ]);
    };
    emit("all", sources.len(), &baseline);
    for skip in 0..sources.len() {
        let subset: Vec<&ProbMatrix<f64>> = sources
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, (_, m))| m)
            .collect();
        let scores = score_subset(&data.dataset, &subset)?;
        emit(&format!("minus-{}", sources[skip].0), subset.len(), &scores);
    }

    let path = out.join("ablation.csv");
    write_csv(
        &path,
        &[
            "row",
            "n_models",
            "accuracy",
            "weighted_f1",
            "csmf_accuracy",
            "delta_accuracy",
            "delta_weighted_f1",
            "delta_csmf_accuracy",
        ],
        &rows,
    )?;
    for row in &rows {
        println!(
            "ablation: {} n={} accuracy={} delta={}",
            row[0], row[1], row[2], row[5]
        );
    }
    Ok(())
}
