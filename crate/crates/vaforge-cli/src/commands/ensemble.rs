//! `ensemble`: soft-vote saved prediction matrices and score the result.

use crate::config::{EnsembleSettings, RunConfig, RunManifest, MANIFEST_KIND, MANIFEST_VERSION};
use crate::error::validation;
use crate::io::{ensure_out_dir, load_inputs};
use crate::pipeline::{evaluate_and_write, summary_line};
use anyhow::{Context, Result};
use std::path::Path;
use vaforge_core::artifact::save_artifact;
use vaforge_core::fusion::soft_vote;
use vaforge_core::prob::ProbMatrix;

/// Row-sum slack accepted when reading probability CSVs back in.
pub const CSV_PROB_TOLERANCE: f64 = 1e-9;

/// Loads the configured prediction files with their display names.
pub fn load_prediction_sources(
    settings: &EnsembleSettings,
) -> Result<Vec<(String, ProbMatrix<f64>)>> {
    if let Some(names) = &settings.names {
        if names.len() != settings.predictions.len() {
            return Err(validation(format!(
                "ensemble.names has {} entries for {} prediction files",
                names.len(),
                settings.predictions.len()
            ))
            .into());
        }
    }
    let names = source_names(settings);
    let mut sources = Vec::new();
    for (name, path) in names.into_iter().zip(&settings.predictions) {
        let probs = ProbMatrix::from_csv(path, CSV_PROB_TOLERANCE)
            .with_context(|| format!("reading predictions {}", path.display()))?;
        sources.push((name, probs));
    }
    Ok(sources)
}

/// Display names: explicit names, else file stems, else full paths when
/// stems collide.
fn source_names(settings: &EnsembleSettings) -> Vec<String> {
    if let Some(names) = &settings.names {
        return names.clone();
    }
    let stems: Vec<String> = settings
        .predictions
        .iter()
        .map(|p| stem_of(p))
        .collect();
    let mut sorted = stems.clone();
    sorted.sort();
    let collision = sorted.windows(2).any(|w| w[0] == w[1]);
    if collision {
        settings
            .predictions
            .iter()
            .map(|p| p.display().to_string())
            .collect()
    } else {
        stems
    }
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Soft-votes the configured prediction files and writes the standard
/// artifact set plus a manifest.
pub fn cmd_ensemble(config: &RunConfig) -> Result<()> {
    let settings = config
        .ensemble
        .as_ref()
        .ok_or_else(|| validation("ensemble command needs an \"ensemble\" config section"))?;
    if settings.predictions.len() < 2 {
        return Err(validation("ensemble needs at least two prediction files").into());
    }
    let out = ensure_out_dir(config)?;
    let data = load_inputs(config)?;
    let sources = load_prediction_sources(settings)?;
    let matrices: Vec<ProbMatrix<f64>> = sources.into_iter().map(|(_, m)| m).collect();
    let (voted, _) = soft_vote(&matrices)?;
    let (report, _) = evaluate_and_write(&data.dataset, &voted, &out)?;
    let manifest = RunManifest {
        command: "ensemble".to_string(),
        config: config.clone(),
    };
    save_artifact(
        &out.join("manifest.json"),
        MANIFEST_KIND,
        MANIFEST_VERSION,
        &manifest,
    )?;
    println!("ensemble: {}", summary_line(&report));
    Ok(())
}
