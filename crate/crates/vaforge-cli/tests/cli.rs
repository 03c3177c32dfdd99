//! End-to-end tests of the `vaforge` binary: every subcommand, exit-code
//! contract, and artifact shape, on small synthetic corpora.

mod common;

use common::*;
use serde_json::json;
use tempfile::TempDir;

fn stdout_of(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn no_config_is_a_usage_error() {
    let out = vaforge(&["validate"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("VAFORGE_CONFIG"));
}

#[test]
fn missing_config_file_is_a_runtime_error() {
    let out = vaforge(&["validate", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
}

#[test]
fn validate_accepts_a_clean_corpus() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    let path = write_workspace(dir.path(), &separable_corpus(60, 1), &SEP_CLASSES, &config);

    let out = vaforge_ok(&["validate", "--config", path.to_str().unwrap()]);
    assert!(stdout_of(&out).contains("60 record(s), 0 error(s)"));

    let report = read_json(&dir.path().join("out/validation.json"));
    assert_eq!(report["kind"], "vaforge.validation-report");
    assert_eq!(report["payload"]["n_records"], 60);
    assert_eq!(report["payload"]["errors"].as_array().unwrap().len(), 0);
    assert_eq!(
        report["payload"]["invalid_narrative_ids"].as_array().unwrap().len(),
        0
    );
}

#[test]
fn validate_flags_placeholder_narratives_without_failing() {
    let dir = TempDir::new().unwrap();
    let mut records = separable_corpus(30, 2);
    records[4].narrative = "Folder empty".into();
    records[9].narrative = "   ".into();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    let path = write_workspace(dir.path(), &records, &SEP_CLASSES, &config);

    vaforge_ok(&["validate", "--config", path.to_str().unwrap()]);
    let report = read_json(&dir.path().join("out/validation.json"));
    let flagged: Vec<&str> = report["payload"]["invalid_narrative_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(flagged, vec!["r0004", "r0009"]);
    assert!(!report["payload"]["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn validate_rejects_labels_outside_the_taxonomy() {
    let dir = TempDir::new().unwrap();
    let mut records = separable_corpus(30, 3);
    records[7].cause_level3 = Some("Unknown syndrome".into());
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    let path = write_workspace(dir.path(), &records, &SEP_CLASSES, &config);

    let out = vaforge(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("Unknown syndrome"));
}

#[test]
fn validate_rejects_a_missing_taxonomy_file() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    config["taxonomy"] = json!(dir.path().join("no-such-taxonomy.json"));
    let path = write_workspace(dir.path(), &separable_corpus(30, 4), &SEP_CLASSES, &config);

    let out = vaforge(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn prep_renders_question_sentences_into_the_narrative() {
    let dir = TempDir::new().unwrap();
    let template = "indicator,yes_text,no_text,skip_on\n\
                    i250a,The deceased had high blood pressure.,The deceased did not have high blood pressure.,\n\
                    i251a,The deceased had fever.,The deceased did not have fever.,\n";
    std::fs::write(dir.path().join("templates.csv"), template).unwrap();

    let mut records = separable_corpus(12, 5);
    records[3].narrative = "Folder empty".into();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    config["template_table"] = json!(dir.path().join("templates.csv"));
    let path = write_workspace(dir.path(), &records, &SEP_CLASSES, &config);

    vaforge_ok(&["prep", "--config", path.to_str().unwrap()]);
    let prepared = read_json(&dir.path().join("out/prepared.json"));
    assert_eq!(prepared["kind"], "vaforge.prepared-corpus");
    let rows = prepared["payload"].as_array().unwrap();
    assert_eq!(rows.len(), 12);

    // Record r0000 is class 0: i250a yes, i251a no.
    let first = &rows[0];
    assert_eq!(first["id"], "r0000");
    assert_eq!(first["narrative_valid"], true);
    assert!(!first["tokens"].as_array().unwrap().is_empty());
    let fused = first["fused_document"].as_str().unwrap();
    assert!(fused.contains("The deceased had high blood pressure."));
    assert!(fused.contains("The deceased did not have fever."));

    assert_eq!(rows[3]["narrative_valid"], false);
}

#[test]
fn run_question_model_is_perfect_on_a_separable_corpus() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    let path = write_workspace(dir.path(), &separable_corpus(120, 6), &SEP_CLASSES, &config);

    let out = vaforge_ok(&["run", "--config", path.to_str().unwrap()]);
    assert!(stdout_of(&out).contains("accuracy=1.0000"));

    for artifact in [
        "metrics.json",
        "confusion.csv",
        "csmf.csv",
        "predictions.csv",
        "manifest.json",
    ] {
        assert!(
            dir.path().join("out").join(artifact).is_file(),
            "missing artifact {artifact}"
        );
    }
    let metrics = read_json(&dir.path().join("out/metrics.json"));
    assert_eq!(metrics["accuracy"], 1.0);
    assert_eq!(metrics["n_records"], 24);
    assert_eq!(metrics["micro"]["f1"], metrics["accuracy"]);
}

#[test]
fn run_replay_from_the_manifest_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([
        learner("text-lr", "narrative", "logreg", 7),
        learner("q-lr", "questions", "logreg", 8),
    ]);
    config["fusion"] = json!("stacking");
    config["stacking"] = json!({ "k_folds": 3 });
    let path = write_workspace(dir.path(), &separable_corpus(90, 7), &SEP_CLASSES, &config);

    vaforge_ok(&["run", "--config", path.to_str().unwrap()]);
    let manifest = dir.path().join("out/manifest.json");
    let replay_out = dir.path().join("replay");
    vaforge_ok(&[
        "run",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        replay_out.to_str().unwrap(),
    ]);

    for artifact in ["metrics.json", "predictions.csv", "csmf.csv", "confusion.csv"] {
        let a = std::fs::read(dir.path().join("out").join(artifact)).unwrap();
        let b = std::fs::read(replay_out.join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between run and replay");
    }
}

#[test]
fn seed_flag_rewrites_every_seed_in_the_manifest() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([
        learner("text-lr", "narrative", "logreg", 7),
        learner("q-lr", "questions", "logreg", 8),
    ]);
    let path = write_workspace(dir.path(), &separable_corpus(60, 8), &SEP_CLASSES, &config);

    vaforge_ok(&["run", "--config", path.to_str().unwrap(), "--seed", "123"]);
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    let cfg = &manifest["payload"]["config"];
    assert_eq!(cfg["split"]["seed"], 123);
    for entry in cfg["learners"].as_array().unwrap() {
        assert_eq!(entry["spec"]["seed"], 123);
    }
}

#[test]
fn ensemble_of_identical_models_matches_the_single_model() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    let path = write_workspace(dir.path(), &separable_corpus(90, 9), &SEP_CLASSES, &config);

    let out_a = dir.path().join("out-a");
    let out_b = dir.path().join("out-b");
    vaforge_ok(&["run", "--config", path.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    vaforge_ok(&["run", "--config", path.to_str().unwrap(), "--out", out_b.to_str().unwrap()]);

    let mut config2 = base_config(dir.path());
    config2["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    config2["ensemble"] = json!({
        "predictions": [out_a.join("predictions.csv"), out_b.join("predictions.csv")],
        "names": ["a", "b"],
    });
    config2["out_dir"] = json!(dir.path().join("out-vote"));
    let path2 = dir.path().join("config2.json");
    write_json(&path2, &config2);
    vaforge_ok(&["ensemble", "--config", path2.to_str().unwrap()]);

    // Voting two copies of the same prediction matrix must reproduce the
    // single model's headline metrics.
    let single = read_json(&out_a.join("metrics.json"));
    let voted = read_json(&dir.path().join("out-vote/metrics.json"));
    assert_eq!(single["accuracy"], voted["accuracy"]);
    assert_eq!(single["weighted"]["f1"], voted["weighted"]["f1"]);
    let a = single["csmf_accuracy_mean_prob"].as_f64().unwrap();
    let b = voted["csmf_accuracy_mean_prob"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-12, "csmf accuracy drifted: {a} vs {b}");
}

#[test]
fn ablation_baseline_row_has_exactly_zero_deltas() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([
        learner("q-lr", "questions", "logreg", 7),
        learner("text-lr", "narrative", "logreg", 8),
    ]);
    let path = write_workspace(dir.path(), &separable_corpus(90, 10), &SEP_CLASSES, &config);

    // Produce one prediction file per modality.
    let out_q = dir.path().join("out-q");
    let out_t = dir.path().join("out-t");
    vaforge_ok(&["run", "--config", path.to_str().unwrap(), "--out", out_q.to_str().unwrap()]);
    let mut text_config = config.clone();
    text_config["learners"] = json!([
        learner("text-lr", "narrative", "logreg", 8),
        learner("q-lr", "questions", "logreg", 7),
    ]);
    let text_path = dir.path().join("config-text.json");
    write_json(&text_path, &text_config);
    vaforge_ok(&["run", "--config", text_path.to_str().unwrap(), "--out", out_t.to_str().unwrap()]);

    let mut ab_config = config.clone();
    ab_config["ensemble"] = json!({
        "predictions": [out_q.join("predictions.csv"), out_t.join("predictions.csv")],
        "names": ["questions", "narrative"],
    });
    ab_config["out_dir"] = json!(dir.path().join("out-ablation"));
    let ab_path = dir.path().join("config-ablation.json");
    write_json(&ab_path, &ab_config);
    vaforge_ok(&["ablation", "--config", ab_path.to_str().unwrap()]);

    let table = std::fs::read_to_string(dir.path().join("out-ablation/ablation.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "row,n_models,accuracy,weighted_f1,csmf_accuracy,delta_accuracy,delta_weighted_f1,delta_csmf_accuracy"
    );
    assert_eq!(lines.len(), 4, "header, all, and one row per removed model");
    let all_row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(all_row[0], "all");
    assert_eq!(all_row[1], "2");
    assert_eq!(&all_row[5..], &["0", "0", "0"], "baseline deltas must be exactly zero");
    assert!(lines[2].starts_with("minus-questions,1,"));
    assert!(lines[3].starts_with("minus-narrative,1,"));

    // With the narrative model removed, only the perfect question model
    // remains, so that row's accuracy is 1.
    let minus_narrative: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(minus_narrative[2], "1");
}

#[test]
fn sensitivity_covers_the_full_fraction_grid() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    let path = write_workspace(dir.path(), &separable_corpus(150, 11), &SEP_CLASSES, &config);

    vaforge_ok(&["sensitivity", "--config", path.to_str().unwrap()]);
    let table = std::fs::read_to_string(dir.path().join("out/sensitivity.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "fraction,n_train,accuracy,weighted_f1,csmf_accuracy");
    assert_eq!(lines.len(), 11, "ten fractions plus the header");

    let mut fractions = Vec::new();
    let mut n_train = Vec::new();
    let mut accuracy = Vec::new();
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        fractions.push(cells[0].parse::<f64>().unwrap());
        n_train.push(cells[1].parse::<usize>().unwrap());
        accuracy.push(cells[2].parse::<f64>().unwrap());
    }
    let expected: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).chain([1.0]).collect();
    assert_eq!(fractions, expected);
    assert!(n_train.windows(2).all(|w| w[0] <= w[1]), "n_train must grow with the fraction");
    assert_eq!(n_train[9], 120, "the full fraction trains on the whole training split");
    assert_eq!(accuracy[9], 1.0, "the question model is perfect with all training data");
}

#[test]
fn hpo_logs_every_trial_and_saves_the_best_config() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    config["hpo"] = json!({ "n_trials": 4, "k_folds": 2, "seed": 5 });
    let path = write_workspace(dir.path(), &separable_corpus(90, 12), &SEP_CLASSES, &config);

    let out = vaforge_ok(&["hpo", "--config", path.to_str().unwrap()]);
    assert!(stdout_of(&out).contains("hpo: 4 trial(s)"));

    let log = std::fs::read_to_string(dir.path().join("out/study.jsonl")).unwrap();
    let trials: Vec<serde_json::Value> = log
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(trials.len(), 4);
    for (i, trial) in trials.iter().enumerate() {
        assert_eq!(trial["trial_id"], i as u64);
        assert!(["complete", "pruned", "failed"]
            .contains(&trial["state"].as_str().unwrap()));
    }

    let best = read_json(&dir.path().join("out/best_config.json"));
    assert_eq!(best["kind"], "vaforge.hpo-best");
    assert_eq!(best["payload"]["n_trials"], 4);
    assert!(best["payload"]["score"].as_f64().unwrap() > 0.0);
    let tuned = best["payload"]["config"].as_object().unwrap();
    for key in ["lr", "epochs", "l2"] {
        assert!(tuned.contains_key(key), "missing tuned key {key}");
    }
}

#[test]
fn sufficiency_writes_the_contribution_report() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    config["sufficiency"] = json!({ "test_fraction": 0.25 });
    let path = write_workspace(dir.path(), &separable_corpus(200, 13), &SEP_CLASSES, &config);

    vaforge_ok(&["sufficiency", "--config", path.to_str().unwrap()]);
    let report = read_json(&dir.path().join("out/sufficiency.json"));
    assert_eq!(report["kind"], "vaforge.sufficiency-report");
    let payload = &report["payload"];
    assert_eq!(
        payload["n_train"].as_u64().unwrap() + payload["n_test"].as_u64().unwrap(),
        200
    );
    for key in ["acc_narrative", "acc_question", "acc_multimodal"] {
        let v = payload[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v} outside [0, 1]");
    }
    if !payload["contribution"].is_null() {
        let n = payload["contribution"]["contrib_narrative_pct"].as_f64().unwrap();
        let q = payload["contribution"]["contrib_question_pct"].as_f64().unwrap();
        assert_eq!(q, 100.0 - n);
    }
}

#[test]
fn report_summarizes_existing_artifacts() {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    config["learners"] = json!([learner("q-lr", "questions", "logreg", 7)]);
    let path = write_workspace(dir.path(), &separable_corpus(120, 14), &SEP_CLASSES, &config);

    vaforge_ok(&["run", "--config", path.to_str().unwrap()]);
    vaforge_ok(&["sensitivity", "--config", path.to_str().unwrap()]);
    vaforge_ok(&["report", "--config", path.to_str().unwrap()]);

    let report = std::fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(report.contains("# vaforge report"));
    assert!(report.contains("## Headline metrics"));
    assert!(report.contains("## Training-size sensitivity"));
    assert!(report.contains("| accuracy | 1.0 |"));

    // An out directory with no artifacts at all is a validation failure.
    let empty = dir.path().join("empty-out");
    std::fs::create_dir_all(&empty).unwrap();
    let out = vaforge(&[
        "report",
        "--config",
        path.to_str().unwrap(),
        "--out",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}
