//! `sufficiency`: predict grouped information-sufficiency from each
//! modality and report the modalities' marginal contributions.

use crate::config::RunConfig;
use crate::io::{ensure_out_dir, load_inputs};
use anyhow::Result;
use vaforge_core::artifact::save_artifact;
use vaforge_core::sufficiency::{predict_sufficiency_pipeline, SufficiencyPipelineConfig};

/// Artifact kind tag for sufficiency reports.
pub const SUFFICIENCY_KIND: &str = "vaforge.sufficiency-report";
const SUFFICIENCY_VERSION: u32 = 1;

/// Runs the sufficiency pipeline and writes `sufficiency.json`.
pub fn cmd_sufficiency(config: &RunConfig) -> Result<()> {
    let settings = config.sufficiency.clone().unwrap_or_default();
    let out = ensure_out_dir(config)?;
    let data = load_inputs(config)?;
    let seed = settings.seed.unwrap_or(config.split.seed);
    let mut pipeline = SufficiencyPipelineConfig::new(seed);
    pipeline.narrative = config.narrative.clone();
    pipeline.test_fraction = settings.test_fraction;
    let outcome = predict_sufficiency_pipeline(&data.dataset, &pipeline)?;
    save_artifact(
        &out.join("sufficiency.json"),
        SUFFICIENCY_KIND,
        SUFFICIENCY_VERSION,
        &outcome,
    )?;
    println!(
        "sufficiency: n_train={} n_test={} acc_narrative={:.4} acc_question={:.4} acc_multimodal={:.4}",
        outcome.n_train,
        outcome.n_test,
        outcome.acc_narrative,
        outcome.acc_question,
        outcome.acc_multimodal
    );
    match &outcome.contribution {
        Some(c) => println!(
            "sufficiency: narrative contributes {:.1}%, questions {:.1}% of the fusion gain",
            c.contrib_narrative_pct, c.contrib_question_pct
        ),
        None => println!("sufficiency: fusion gain is zero; contribution split undefined"),
    }
    Ok(())
}
