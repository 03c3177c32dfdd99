//! `hpo`: tune one learner's hyperparameters with the TPE sampler and
//! median pruning, scored by cross-validated weighted F1 on the training
//! split.

use crate::config::RunConfig;
use crate::error::validation;
use crate::io::{ensure_out_dir, load_inputs};
use crate::pipeline::Featurizer;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use vaforge_core::artifact::save_artifact;
use vaforge_core::data::stratified_split;
use vaforge_core::hpo::{
    cv_objective, presets, run_study, write_study_log, StudyConfig, TrialConfig, TrialState,
};
use vaforge_core::learners::LearnerKind;

/// Artifact kind tag for the best-trial summary.
pub const HPO_BEST_KIND: &str = "vaforge.hpo-best";
const HPO_BEST_VERSION: u32 = 1;

/// Payload of `best_config.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestTrial {
    pub config: TrialConfig,
    pub score: f64,
    pub n_trials: usize,
    pub n_complete: usize,
    pub n_pruned: usize,
    pub n_failed: usize,
}

/// Runs the study and writes `study.jsonl` plus `best_config.json`.
pub fn cmd_hpo(config: &RunConfig) -> Result<()> {
    let settings = config.hpo.clone().unwrap_or_default();
    let entry = config.entry_named(settings.learner.as_deref())?.clone();
    let out = ensure_out_dir(config)?;
    let data = load_inputs(config)?;
    let plan = stratified_split(&data.dataset, config.split.test_fraction, config.split.seed)?;
    let train = data.dataset.subset_by_ids(&plan.train_ids)?;
    let test = data.dataset.subset_by_ids(&plan.test_ids)?;
    let mut featurizer = Featurizer::new(&train, &test, config, &data.table);
    let features = featurizer.bundle(entry.features)?.train.clone();

    let space = match &settings.space {
        Some(space) => space.clone(),
        None => match entry.spec.kind {
            LearnerKind::External => {
                return Err(validation(
                    "external adapters have no preset search space; supply hpo.space",
                )
                .into())
            }
            kind => presets::ml_search_space(kind)?,
        },
    };
    let objective = cv_objective(&entry.spec, &train, &features, settings.k_folds)?;
    let study = StudyConfig {
        n_trials: settings.n_trials,
        direction: settings.direction,
        pruner: settings.pruner,
        seed: settings.seed,
    };
    let (best, log) = run_study(objective, &space, &study)
        .context("hyperparameter study failed")?;
    write_study_log(&out.join("study.jsonl"), &log)?;

    let count = |state: TrialState| log.iter().filter(|r| r.state == state).count();
    let score = log
        .iter()
        .find(|r| r.state == TrialState::Complete && r.config == best)
        .and_then(|r| r.final_score)
        .expect("the best trial is a completed trial in the log");
    let best_trial = BestTrial {
        config: best,
        score,
        n_trials: log.len(),
        n_complete: count(TrialState::Complete),
        n_pruned: count(TrialState::Pruned),
        n_failed: count(TrialState::Failed),
    };
    save_artifact(
        &out.join("best_config.json"),
        HPO_BEST_KIND,
        HPO_BEST_VERSION,
        &best_trial,
    )?;
    println!(
        "hpo: {} trial(s) ({} complete, {} pruned, {} failed), best score {}",
        best_trial.n_trials,
        best_trial.n_complete,
        best_trial.n_pruned,
        best_trial.n_failed,
        best_trial.score
    );
    Ok(())
}
