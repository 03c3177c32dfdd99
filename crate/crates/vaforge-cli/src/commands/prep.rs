//! `prep`: preprocess narratives and render question sentences, writing a
//! prepared corpus other tools (or inspection) can consume.

use crate::config::RunConfig;
use crate::io::{ensure_out_dir, load_inputs};
use anyhow::Result;
use serde::{Deserialize, Serialize};
use vaforge_core::artifact::save_artifact;
use vaforge_core::template::build_fused_document;
use vaforge_core::text::{is_invalid_narrative, preprocess};

/// Artifact kind tag for prepared corpora.
pub const PREPARED_KIND: &str = "vaforge.prepared-corpus";
const PREPARED_VERSION: u32 = 1;

/// One record after text preparation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreparedRecord {
    pub id: String,
    /// False when the narrative matches a placeholder phrase.
    pub narrative_valid: bool,
    /// Preprocessed narrative tokens.
    pub tokens: Vec<String>,
    /// Narrative extended with rendered question sentences.
    pub fused_document: String,
}

/// Writes `prepared.json` with tokens and fused documents per record.
pub fn cmd_prep(config: &RunConfig) -> Result<()> {
    let out = ensure_out_dir(config)?;
    let data = load_inputs(config)?;
    let prepared: Vec<PreparedRecord> = data
        .dataset
        .records()
        .iter()
        .map(|rec| PreparedRecord {
            id: rec.id.clone(),
            narrative_valid: !is_invalid_narrative(&rec.narrative),
            tokens: preprocess(&rec.narrative, &config.narrative.preprocess),
            fused_document: build_fused_document(rec, &data.table),
        })
        .collect();
    let n_invalid = prepared.iter().filter(|p| !p.narrative_valid).count();
    save_artifact(
        &out.join("prepared.json"),
        PREPARED_KIND,
        PREPARED_VERSION,
        &prepared,
    )?;
    println!(
        "prep: {} record(s) prepared, {} invalid narrative(s)",
        prepared.len(),
        n_invalid
    );
    Ok(())
}
