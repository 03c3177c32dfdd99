//! `validate`: schema and referential checks with per-record diagnostics.

use crate::config::RunConfig;
use crate::error::validation;
use crate::io::{ensure_out_dir, load_records, load_taxonomy};
use anyhow::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::str::FromStr;
use vaforge_core::artifact::save_artifact;
use vaforge_core::data::{Dataset, Level};
use vaforge_core::template::TemplateTable;
use vaforge_core::text::is_invalid_narrative;

/// Artifact kind tag for validation reports.
pub const VALIDATION_KIND: &str = "vaforge.validation-report";
const VALIDATION_VERSION: u32 = 1;

/// What `validate` found. Errors fail the command; warnings do not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_records: usize,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    /// Records whose narrative matches a known placeholder phrase.
    pub invalid_narrative_ids: Vec<String>,
}

/// Runs all checks, writes `validation.json`, prints the findings, and
/// fails (exit code 2) iff any error was found.
pub fn cmd_validate(config: &RunConfig) -> Result<()> {
    let report = build_report(config);
    let out = ensure_out_dir(config)?;
    save_artifact(
        &out.join("validation.json"),
        VALIDATION_KIND,
        VALIDATION_VERSION,
        &report,
    )?;
    for err in &report.errors {
        println!("error: {err}");
    }
    for warn in &report.warnings {
        println!("warning: {warn}");
    }
    println!(
        "validate: {} record(s), {} error(s), {} warning(s), {} invalid narrative(s)",
        report.n_records,
        report.errors.len(),
        report.warnings.len(),
        report.invalid_narrative_ids.len()
    );
    if report.errors.is_empty() {
        Ok(())
    } else {
        Err(validation(format!("{} validation error(s)", report.errors.len())).into())
    }
}

fn build_report(config: &RunConfig) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let mut invalid_narrative_ids = Vec::new();
    let mut n_records = 0;

    if config.records.is_empty() {
        errors.push("config lists no record files".to_string());
    }
    for path in &config.records {
        if !path.exists() {
            errors.push(format!("records file {} does not exist", path.display()));
        }
    }
    if !config.taxonomy.exists() {
        errors.push(format!(
            "taxonomy file {} does not exist",
            config.taxonomy.display()
        ));
    }
    if let Some(path) = &config.template_table {
        if !path.exists() {
            errors.push(format!(
                "template table {} does not exist",
                path.display()
            ));
        } else if let Err(e) = TemplateTable::from_csv_file(path) {
            errors.push(format!("template table {}: {e}", path.display()));
        }
    }
    let level = match Level::from_str(&config.label_level) {
        Ok(level) => Some(level),
        Err(e) => {
            errors.push(format!("label_level: {e}"));
            None
        }
    };
    if !(config.split.test_fraction > 0.0 && config.split.test_fraction < 1.0) {
        errors.push(format!(
            "split.test_fraction {} is outside (0, 1)",
            config.split.test_fraction
        ));
    }
    if !errors.is_empty() {
        return ValidationReport {
            n_records,
            errors,
            warnings,
            invalid_narrative_ids,
        };
    }

    let records = match load_records(&config.records) {
        Ok(records) => records,
        Err(e) => {
            errors.push(e.to_string());
            return ValidationReport {
                n_records,
                errors,
                warnings,
                invalid_narrative_ids,
            };
        }
    };
    n_records = records.len();
    let taxonomy = match load_taxonomy(&config.taxonomy) {
        Ok(taxonomy) => taxonomy,
        Err(e) => {
            errors.push(e.to_string());
            return ValidationReport {
                n_records,
                errors,
                warnings,
                invalid_narrative_ids,
            };
        }
    };

    let mut seen_ids = BTreeSet::new();
    for rec in &records {
        if rec.id.trim().is_empty() {
            errors.push("a record has an empty id".to_string());
        }
        if !seen_ids.insert(rec.id.clone()) {
            errors.push(format!("duplicate record id {:?}", rec.id));
        }
        for (lvl, label) in [
            (Level::L1, &rec.cause_level1),
            (Level::L2, &rec.cause_level2),
            (Level::L3, &rec.cause_level3),
        ] {
            if let Some(label) = label {
                if taxonomy.encode(lvl, label).is_none() {
                    errors.push(format!(
                        "record {:?}: label {label:?} is not in the {lvl} class list",
                        rec.id
                    ));
                }
            }
        }
        if let Some(score) = rec.sufficiency_score {
            if !(1..=5).contains(&score) {
                errors.push(format!(
                    "record {:?}: sufficiency score {score} is outside 1..=5",
                    rec.id
                ));
            }
        }
        if let Some(code) = &rec.cause_icd10 {
            if taxonomy.lookup_icd10(code).is_none() {
                warnings.push(format!(
                    "record {:?}: ICD-10 code {code:?} has no taxonomy mapping",
                    rec.id
                ));
            }
        }
        if is_invalid_narrative(&rec.narrative) {
            invalid_narrative_ids.push(rec.id.clone());
        }
    }
    if !invalid_narrative_ids.is_empty() {
        warnings.push(format!(
            "{} record(s) have placeholder or empty narratives: {}",
            invalid_narrative_ids.len(),
            invalid_narrative_ids.join(", ")
        ));
    }

    // The constructor enforces anything the loop above does not.
    if errors.is_empty() {
        if let Some(level) = level {
            if let Err(e) = Dataset::new(records, taxonomy, level) {
                errors.push(format!("dataset: {e}"));
            }
        }
    }

    ValidationReport {
        n_records,
        errors,
        warnings,
        invalid_narrative_ids,
    }
}
