//! File loading and table writing shared by the subcommands.

use crate::config::RunConfig;
use crate::error::validation;
use anyhow::{Context, Result};
use serde::Deserialize;
use std::path::Path;
use vaforge_core::data::{CauseTaxonomy, Dataset, Icd10Mapping, VARecord};
use vaforge_core::template::TemplateTable;

/// On-disk taxonomy schema: class lists per level plus the ICD-10 map.
/// Deserialized through this intermediate so the validated
/// [`CauseTaxonomy`] constructor always runs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TaxonomyFile {
    level1: Vec<String>,
    level2: Vec<String>,
    level3: Vec<String>,
    icd10_map: Vec<Icd10Mapping>,
}

/// Loads and validates a taxonomy JSON file.
pub fn load_taxonomy(path: &Path) -> Result<CauseTaxonomy> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read taxonomy file {}", path.display()))?;
    let file: TaxonomyFile = serde_json::from_str(&raw)
        .map_err(|e| validation(format!("taxonomy {}: {e}", path.display())))?;
    CauseTaxonomy::new(file.level1, file.level2, file.level3, file.icd10_map)
        .map_err(|e| validation(format!("taxonomy {}: {e}", path.display())).into())
}

/// Loads record files (each a JSON array) and concatenates them in order.
pub fn load_records(paths: &[std::path::PathBuf]) -> Result<Vec<VARecord>> {
    let mut records = Vec::new();
    for path in paths {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read records file {}", path.display()))?;
        let mut batch: Vec<VARecord> = serde_json::from_str(&raw)
            .map_err(|e| validation(format!("records {}: {e}", path.display())))?;
        records.append(&mut batch);
    }
    Ok(records)
}

/// Everything a pipeline command needs loaded from disk.
pub struct LoadedData {
    pub dataset: Dataset,
    pub table: TemplateTable,
}

/// Loads records, taxonomy, and template table per the config, and builds
/// the validated dataset at the configured label level.
pub fn load_inputs(config: &RunConfig) -> Result<LoadedData> {
    let level = config.level()?;
    let records = load_records(&config.records)?;
    let taxonomy = load_taxonomy(&config.taxonomy)?;
    let dataset = Dataset::new(records, taxonomy, level)
        .map_err(|e| validation(format!("dataset: {e}")))?;
    let table = match &config.template_table {
        Some(path) => TemplateTable::from_csv_file(path)
            .map_err(|e| validation(format!("template table {}: {e}", path.display())))?,
        None => TemplateTable::starter(),
    };
    Ok(LoadedData { dataset, table })
}

/// Creates the output directory and returns it.
pub fn ensure_out_dir(config: &RunConfig) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(&config.out_dir).with_context(|| {
        format!(
            "cannot create output directory {}",
            config.out_dir.display()
        )
    })?;
    Ok(config.out_dir.clone())
}

/// Writes rows as CSV with the given header. Numbers should already be
/// formatted by the caller; values are quoted only when necessary.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Shortest-round-trip decimal rendering, the one float format used in
/// every table this tool writes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
