//! `report`: render the artifacts in the output directory as one
//! human-readable markdown summary.
//!
//! Numbers are re-emitted exactly as serialized in the source artifacts,
//! so the report is byte-stable across reruns.

use crate::config::RunConfig;
use crate::error::validation;
use anyhow::Result;
use serde_json::Value;
use std::path::Path;

/// Builds `report.md` from whatever artifacts exist in `out_dir`.
pub fn cmd_report(config: &RunConfig) -> Result<()> {
    let out = &config.out_dir;
    let mut sections = Vec::new();
    if let Some(metrics) = read_json(&out.join("metrics.json"))? {
        sections.push(metrics_section(&metrics));
    }
    if let Some(csv) = read_text(&out.join("sensitivity.csv"))? {
        sections.push(csv_section("Training-size sensitivity", &csv));
    }
    if let Some(csv) = read_text(&out.join("ablation.csv"))? {
        sections.push(csv_section("Leave-one-model-out ablation", &csv));
    }
    if let Some(artifact) = read_json(&out.join("sufficiency.json"))? {
        sections.push(sufficiency_section(&artifact));
    }
    if let Some(artifact) = read_json(&out.join("best_config.json"))? {
        sections.push(hpo_section(&artifact));
    }
    if sections.is_empty() {
        return Err(validation(format!(
            "no artifacts to report in {}; run a pipeline command first",
            out.display()
        ))
        .into());
    }
    let mut body = String::from("# vaforge report\n");
    for section in sections {
        body.push('\n');
        body.push_str(&section);
    }
    let path = out.join("report.md");
    std::fs::write(&path, body)?;
    println!("report: wrote {}", path.display());
    Ok(())
}

fn read_json(path: &Path) -> Result<Option<Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let raw = std::fs::read_to_string(path)?;
    Ok(Some(serde_json::from_str(&raw)?))
}

fn read_text(path: &Path) -> Result<Option<String>> {
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(std::fs::read_to_string(path)?))
}

/// A JSON scalar rendered for a table cell.
fn cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn get<'v>(value: &'v Value, key: &str) -> Value {
    value.get(key).cloned().unwrap_or(Value::Null)
}

fn metrics_section(metrics: &Value) -> String {
    let mut s = String::from("## Headline metrics\n\n| metric | value |\n|---|---|\n");
    for (label, path) in [
        ("records scored", vec!["n_records"]),
        ("accuracy", vec!["accuracy"]),
        ("weighted precision", vec!["weighted", "precision"]),
        ("weighted recall", vec!["weighted", "recall"]),
        ("weighted F1", vec!["weighted", "f1"]),
        ("macro F1", vec!["macro", "f1"]),
        ("micro F1", vec!["micro", "f1"]),
        ("CSMF accuracy (mean prob.)", vec!["csmf_accuracy_mean_prob"]),
        ("CSMF accuracy (top cause)", vec!["csmf_accuracy_top_cause"]),
        ("CCCSMF accuracy (mean prob.)", vec!["cccsmf_accuracy_mean_prob"]),
        ("CCCSMF accuracy (top cause)", vec!["cccsmf_accuracy_top_cause"]),
    ] {
        let mut v = metrics.clone();
        for key in path {
            v = get(&v, key);
        }
        s.push_str(&format!("| {label} | {} |\n", cell(&v)));
    }

    if let Some(per_class) = metrics.get("per_class").and_then(Value::as_array) {
        s.push_str("\n## Per-class metrics\n\n| class | precision | recall | F1 | support |\n|---|---|---|---|---|\n");
        for row in per_class {
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                cell(&get(row, "class")),
                cell(&get(row, "precision")),
                cell(&get(row, "recall")),
                cell(&get(row, "f1")),
                cell(&get(row, "support")),
            ));
        }
    }

    if let (Some(classes), Some(true_csmf), Some(pred_csmf)) = (
        metrics.get("classes").and_then(Value::as_array),
        metrics.get("true_csmf").and_then(Value::as_array),
        metrics.get("pred_csmf_mean_prob").and_then(Value::as_array),
    ) {
        s.push_str(
            "\n## Cause-specific mortality fractions\n\n| class | true | predicted (mean prob.) |\n|---|---|---|\n",
        );
        for i in 0..classes.len() {
            s.push_str(&format!(
                "| {} | {} | {} |\n",
                cell(&classes[i]),
                true_csmf.get(i).map(cell).unwrap_or_default(),
                pred_csmf.get(i).map(cell).unwrap_or_default(),
            ));
        }
    }
    s
}

/// Renders a CSV artifact (first line header) as a markdown table.
fn csv_section(title: &str, csv: &str) -> String {
    let mut s = format!("## {title}\n\n");
    let mut lines = csv.lines();
    if let Some(header) = lines.next() {
        let cols: Vec<&str> = header.split(',').collect();
        s.push_str(&format!("| {} |\n", cols.join(" | ")));
        s.push_str(&format!("|{}\n", "---|".repeat(cols.len())));
        for line in lines {
            s.push_str(&format!("| {} |\n", line.split(',').collect::<Vec<_>>().join(" | ")));
        }
    }
    s
}

fn sufficiency_section(artifact: &Value) -> String {
    let payload = get(artifact, "payload");
    let mut s = String::from("## Information sufficiency\n\n| quantity | value |\n|---|---|\n");
    for (label, key) in [
        ("training records", "n_train"),
        ("test records", "n_test"),
        ("accuracy, narrative only", "acc_narrative"),
        ("accuracy, questions only", "acc_question"),
        ("accuracy, multimodal", "acc_multimodal"),
    ] {
        s.push_str(&format!("| {label} | {} |\n", cell(&get(&payload, key))));
    }
    let contribution = get(&payload, "contribution");
    if contribution.is_null() {
        s.push_str("\nThe fusion gain is zero, so the contribution split is undefined.\n");
    } else {
        for (label, key) in [
            ("total fusion gain", "total_gain"),
            ("narrative contribution (%)", "contrib_narrative_pct"),
            ("question contribution (%)", "contrib_question_pct"),
        ] {
            s.push_str(&format!(
                "| {label} | {} |\n",
                cell(&get(&contribution, key))
            ));
        }
    }
    s
}

fn hpo_section(artifact: &Value) -> String {
    let payload = get(artifact, "payload");
    let mut s = String::from("## Hyperparameter study\n\n| quantity | value |\n|---|---|\n");
    for (label, key) in [
        ("trials", "n_trials"),
        ("completed", "n_complete"),
        ("pruned", "n_pruned"),
        ("failed", "n_failed"),
        ("best score", "score"),
    ] {
        s.push_str(&format!("| {label} | {} |\n", cell(&get(&payload, key))));
    }
    let config = get(&payload, "config");
    if let Some(map) = config.as_object() {
        s.push_str("\n### Best configuration\n\n| parameter | value |\n|---|---|\n");
        for (key, value) in map {
            s.push_str(&format!("| {key} | {} |\n", cell(value)));
        }
    }
    s
}
