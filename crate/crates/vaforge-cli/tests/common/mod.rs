//! Shared fixtures for the CLI integration tests: synthetic interview
//! corpora with known structure, config-file writers, and helpers for
//! invoking the built binary.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::Output;
use vaforge_core::data::{CauseTaxonomy, Dataset, Level, Response, VARecord};

/// Class names of the two-bit corpus, indexed by `2*a + b` where `a` is the
/// narrative-borne bit and `b` the question-borne bit.
pub const BIT_CLASSES: [&str; 4] = [
    "Non-HIV/TB infections",
    "HIV and pulmonary TB",
    "Injuries",
    "Non-communicable causes",
];

/// Class names of the separable corpus.
pub const SEP_CLASSES: [&str; 3] = [
    "Non-communicable causes",
    "Non-HIV/TB infections",
    "Injuries",
];

const FEBRILE_WORDS: [&str; 6] = ["fever", "cough", "vomiting", "diarrhoea", "chills", "weakness"];
const TRAUMA_WORDS: [&str; 6] = ["injury", "accident", "bleeding", "fracture", "wound", "collision"];
const FILLER_WORDS: [&str; 6] = ["sick", "clinic", "home", "night", "family", "hospital"];

/// A corpus whose cause is a noisy function of two hidden bits carried by
/// disjoint modalities: the narrative vocabulary encodes bit `a`, the
/// `i250a` question response encodes bit `b`, and the label is
/// `BIT_CLASSES[2a + b]` except that a `noise` fraction of records receives
/// a uniformly random label instead. Neither modality alone can do better
/// than distinguishing its own bit.
pub fn bit_corpus(n: usize, seed: u64, noise: f64) -> Vec<VARecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let a = rng.random_range(0..2usize);
        let b = rng.random_range(0..2usize);
        let pool: &[&str] = if a == 0 { &FEBRILE_WORDS } else { &TRAUMA_WORDS };
        let w1 = pool.choose(&mut rng).unwrap();
        let w2 = pool.choose(&mut rng).unwrap();
        let f1 = FILLER_WORDS.choose(&mut rng).unwrap();
        let f2 = FILLER_WORDS.choose(&mut rng).unwrap();
        let mut rec = VARecord::new(format!("r{i:04}"));
        rec.narrative = format!("the deceased was {f1} with {w1} and {w2} before going to the {f2}");
        rec.questions.insert(
            "i250a".into(),
            if b == 1 { Response::Yes } else { Response::No },
        );
        rec.questions.insert(
            "i251a".into(),
            if rng.random_range(0..2) == 0 { Response::Yes } else { Response::No },
        );
        let mut class = 2 * a + b;
        if rng.random::<f64>() < noise {
            class = rng.random_range(0..BIT_CLASSES.len());
        }
        rec.cause_level3 = Some(BIT_CLASSES[class].to_string());
        records.push(rec);
    }
    records
}

/// A corpus whose cause is a deterministic function of two question
/// responses (`i250a`, `i251a`), making the question modality perfectly
/// separable; the narrative carries the class word only 80% of the time.
/// Sufficiency scores cycle through 1..=5.
pub fn separable_corpus(n: usize, seed: u64) -> Vec<VARecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: [&[&str]; 3] = [&["pressure", "sugar"], &["fever", "cough"], &["injury", "wound"]];
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % SEP_CLASSES.len();
        let pool = if rng.random::<f64>() < 0.8 {
            pools[class]
        } else {
            pools[rng.random_range(0..3)]
        };
        let word = pool.choose(&mut rng).unwrap();
        let filler = FILLER_WORDS.choose(&mut rng).unwrap();
        let mut rec = VARecord::new(format!("r{i:04}"));
        rec.narrative = format!("complained of {word} while at {filler}");
        rec.questions.insert(
            "i250a".into(),
            if class == 0 { Response::Yes } else { Response::No },
        );
        rec.questions.insert(
            "i251a".into(),
            if class == 1 { Response::Yes } else { Response::No },
        );
        rec.cause_level3 = Some(SEP_CLASSES[class].to_string());
        rec.sufficiency_score = Some((i % 5) as u8 + 1);
        records.push(rec);
    }
    records
}

/// Builds a level-3 dataset over exactly the given classes.
pub fn dataset(records: Vec<VARecord>, classes: &[&str]) -> Dataset {
    let taxonomy = CauseTaxonomy::new(
        Vec::new(),
        Vec::new(),
        classes.iter().map(|s| s.to_string()).collect(),
        Vec::new(),
    )
    .expect("class list is valid");
    Dataset::new(records, taxonomy, Level::L3).expect("records are valid")
}

/// Writes records as a JSON array.
pub fn write_records(path: &Path, records: &[VARecord]) {
    let text = serde_json::to_string_pretty(records).expect("records serialize");
    std::fs::write(path, text).expect("records file writes");
}

/// Writes a taxonomy file listing exactly the given level-3 classes.
pub fn write_taxonomy(path: &Path, classes: &[&str]) {
    let text = serde_json::to_string_pretty(&json!({ "level3": classes })).expect("serialize");
    std::fs::write(path, text).expect("taxonomy file writes");
}

/// Writes a JSON value to a file.
pub fn write_json(path: &Path, value: &Value) {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text).expect("json file writes");
}

/// A ready-to-edit config pointing at `dir/records.json` and
/// `dir/taxonomy.json`, writing artifacts under `dir/out`. The narrative
/// featurizer is shrunk for small corpora (unigrams, `min_df` 1, no SVD).
pub fn base_config(dir: &Path) -> Value {
    json!({
        "records": [dir.join("records.json")],
        "taxonomy": dir.join("taxonomy.json"),
        "split": { "seed": 7, "test_fraction": 0.2 },
        "narrative": { "ngram_range": [1, 1], "min_df": 1, "svd_k": null },
        "learners": [],
        "out_dir": dir.join("out"),
    })
}

/// A learner entry for the config's `learners` array.
pub fn learner(name: &str, features: &str, kind: &str, seed: u64) -> Value {
    json!({
        "name": name,
        "features": features,
        "spec": { "kind": kind, "hyperparams": {}, "seed": seed },
    })
}

/// Writes the standard corpus files plus a config into `dir` and returns
/// the config path.
pub fn write_workspace(dir: &Path, records: &[VARecord], classes: &[&str], config: &Value) -> PathBuf {
    write_records(&dir.join("records.json"), records);
    write_taxonomy(&dir.join("taxonomy.json"), classes);
    let path = dir.join("config.json");
    write_json(&path, config);
    path
}

/// Runs the built binary with the given arguments.
pub fn vaforge(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_vaforge"))
        .args(args)
        .env_remove("VAFORGE_CONFIG")
        .output()
        .expect("binary starts")
}

/// Runs the binary and asserts success, echoing stderr on failure.
pub fn vaforge_ok(args: &[&str]) -> Output {
    let out = vaforge(args);
    assert!(
        out.status.success(),
        "vaforge {args:?} failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

/// Parses a JSON artifact from disk.
pub fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{} is not JSON: {e}", path.display()))
}
