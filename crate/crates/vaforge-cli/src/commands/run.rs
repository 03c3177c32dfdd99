//! `run`: execute the configured pipeline end to end and write the
//! standard artifact set plus a replayable manifest.

use crate::config::{
    FeatureSpace, FusionStrategy, LearnerEntry, RunConfig, RunManifest, MANIFEST_KIND,
    MANIFEST_VERSION,
};
use crate::error::validation;
use crate::io::{ensure_out_dir, load_inputs};
use crate::pipeline::{evaluate_and_write, fit_and_predict, summary_line, Featurizer};
use anyhow::{Context, Result};
use vaforge_core::artifact::save_artifact;
use vaforge_core::data::stratified_split;
use vaforge_core::fusion::{generate_oof, labels_for, soft_vote, stack_predict, stack_train};
use vaforge_core::learners::fit;
use vaforge_core::prob::ProbMatrix;

/// Runs the pipeline selected by `config.fusion`.
pub fn cmd_run(config: &RunConfig) -> Result<()> {
    let out = ensure_out_dir(config)?;
    let data = load_inputs(config)?;
    let plan = stratified_split(&data.dataset, config.split.test_fraction, config.split.seed)?;
    let train = data.dataset.subset_by_ids(&plan.train_ids)?;
    let test = data.dataset.subset_by_ids(&plan.test_ids)?;
    let mut featurizer = Featurizer::new(&train, &test, config, &data.table);

    let probs = match config.fusion {
        FusionStrategy::Unimodal => {
            single_model(config.entry_named(None)?.clone(), &mut featurizer, &train)?
        }
        FusionStrategy::Data => {
            let mut entry = config.entry_named(None)?.clone();
            entry.features = FeatureSpace::DataFused;
            single_model(entry, &mut featurizer, &train)?
        }
        FusionStrategy::Feature => {
            let mut entry = config.entry_named(None)?.clone();
            entry.features = FeatureSpace::Fused;
            single_model(entry, &mut featurizer, &train)?
        }
        FusionStrategy::SoftVote => {
            if config.learners.len() < 2 {
                return Err(validation(
                    "soft_vote fusion needs at least two learners in the config",
                )
                .into());
            }
            let mut members = Vec::new();
            for entry in &config.learners {
                let y_train = train_labels(&train, entry, &mut featurizer)?;
                let (_, probs) = fit_and_predict(entry, &mut featurizer, &y_train)?;
                members.push(probs);
            }
            let (voted, _) = soft_vote(&members)?;
            voted
        }
        FusionStrategy::Stacking => {
            if config.learners.len() < 2 {
                return Err(validation(
                    "stacking fusion needs at least two learners in the config",
                )
                .into());
            }
            stacked_model(config, &mut featurizer, &train)?
        }
    };

    let (report, _) = evaluate_and_write(&data.dataset, &probs, &out)?;
    let manifest = RunManifest {
        command: "run".to_string(),
        config: config.clone(),
    };
    save_artifact(
        &out.join("manifest.json"),
        MANIFEST_KIND,
        MANIFEST_VERSION,
        &manifest,
    )?;
    println!("run: {}", summary_line(&report));
    Ok(())
}

fn train_labels(
    train: &vaforge_core::data::Dataset,
    entry: &LearnerEntry,
    featurizer: &mut Featurizer<'_>,
) -> Result<Vec<String>> {
    let ids = featurizer.bundle(entry.features)?.train.ids().to_vec();
    Ok(labels_for(train, &ids)?)
}

fn single_model(
    entry: LearnerEntry,
    featurizer: &mut Featurizer<'_>,
    train: &vaforge_core::data::Dataset,
) -> Result<ProbMatrix<f64>> {
    let y_train = train_labels(train, &entry, featurizer)?;
    let (_, probs) = fit_and_predict(&entry, featurizer, &y_train)?;
    Ok(probs)
}

fn stacked_model(
    config: &RunConfig,
    featurizer: &mut Featurizer<'_>,
    train: &vaforge_core::data::Dataset,
) -> Result<ProbMatrix<f64>> {
    let k = config.stacking.k_folds;
    let meta_spec = config.meta_spec();
    let mut oofs = Vec::new();
    let mut models = Vec::new();
    let mut tests = Vec::new();
    for entry in &config.learners {
        let name = entry.display_name();
        let (train_x, test_x) = {
            let bundle = featurizer.bundle(entry.features)?;
            (bundle.train.clone(), bundle.test.clone())
        };
        let oof = generate_oof(&entry.spec, train, &train_x, k, config.split.seed)
            .with_context(|| format!("out-of-fold predictions for {name}"))?;
        let y_train = labels_for(train, train_x.ids())?;
        let model = fit(&entry.spec, &train_x, &y_train)
            .with_context(|| format!("refitting {name} on the full training set"))?;
        oofs.push(oof);
        models.push(model);
        tests.push(test_x);
    }
    let y = labels_for(train, oofs[0].predictions.ids())?;
    let stacked = stack_train(&oofs, &y, &meta_spec)?;
    let (probs, _) = stack_predict(&stacked, &models, &tests)?;
    Ok(probs)
}
