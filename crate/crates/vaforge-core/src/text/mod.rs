//! Narrative validation and text preprocessing.
//!
//! Free-text narratives arrive transcribed from field interviews; some carry
//! placeholder phrases instead of content ("folder empty", "unclear photo")
//! and are treated as invalid, as are empty narratives. Valid text flows
//! through a fixed preprocessing pipeline — lowercase, punctuation strip,
//! whitespace collapse, tokenization, stopword removal, lemmatization — each
//! step individually switchable.
//!
//! The stopword list and the lemma rule table ship with the crate as plain
//! text files; the stopword set can be overridden per run through
//! [`PreprocessConfig`].

pub mod svd;
pub mod tfidf;

pub use svd::{fit_svd, transform_svd, SvdModel};
pub use tfidf::{fit_tfidf, TfidfModel};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

/// Placeholder phrases that mark a narrative as invalid.
///
/// Matching is done on normalized text (lowercased, punctuation stripped,
/// whitespace collapsed).
pub const INVALID_NARRATIVE_SENTINELS: [&str; 7] = [
    "nothing",
    "done",
    "folder empty",
    "photo cannot be read",
    "unclear photo",
    "no preview available",
    "va number does not match",
];

/// Lowercases, strips ASCII punctuation, and collapses whitespace.
fn normalize_sentinel(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped: String = lowered
        .chars()
        .map(|c| if c.is_ascii_punctuation() { ' ' } else { c })
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whether a narrative is a placeholder rather than real content.
///
/// Empty (or whitespace-only) narratives count as invalid too, mirroring the
/// exclusion of interviews without narratives.
pub fn is_invalid_narrative(text: &str) -> bool {
    let normalized = normalize_sentinel(text);
    normalized.is_empty()
        || INVALID_NARRATIVE_SENTINELS
            .iter()
            .any(|s| *s == normalized)
}

fn parse_word_list(raw: &str) -> BTreeSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn parse_lemma_table(raw: &str) -> BTreeMap<String, String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let mut parts = l.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some(from), Some(to)) => Some((from.to_string(), to.to_string())),
                _ => None,
            }
        })
        .collect()
}

/// The bundled English stopword list.
pub fn default_stopwords() -> &'static BTreeSet<String> {
    static LIST: OnceLock<BTreeSet<String>> = OnceLock::new();
    LIST.get_or_init(|| parse_word_list(include_str!("../../data/stopwords.txt")))
}

/// The bundled inflection → base-form rule table.
pub fn lemma_table() -> &'static BTreeMap<String, String> {
    static TABLE: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| parse_lemma_table(include_str!("../../data/lemmas.txt")))
}

/// Parses a user-supplied stopword file (one word per line, `#` comments).
pub fn load_stopwords(path: &std::path::Path) -> Result<BTreeSet<String>> {
    Ok(parse_word_list(&std::fs::read_to_string(path)?))
}

/// Switches for each preprocessing step, applied in the fixed order
/// lowercase → punctuation strip → whitespace collapse → tokenize →
/// stopword removal → lemmatize.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub collapse_whitespace: bool,
    pub remove_stopwords: bool,
    pub lemmatize: bool,
    pub stopword_list: BTreeSet<String>,
}

impl Default for PreprocessConfig {
    /// All steps enabled, with the bundled stopword list.
    fn default() -> Self {
        PreprocessConfig {
            lowercase: true,
            strip_punctuation: true,
            collapse_whitespace: true,
            remove_stopwords: true,
            lemmatize: true,
            stopword_list: default_stopwords().clone(),
        }
    }
}

impl PreprocessConfig {
    /// A configuration with every step disabled (verbatim whitespace tokens).
    pub fn disabled() -> Self {
        PreprocessConfig {
            lowercase: false,
            strip_punctuation: false,
            collapse_whitespace: false,
            remove_stopwords: false,
            lemmatize: false,
            stopword_list: BTreeSet::new(),
        }
    }

    /// Checks the configuration's internal consistency.
    pub fn validate(&self) -> Result<()> {
        if self.remove_stopwords && self.stopword_list.is_empty() {
            return Err(Error::Schema(
                "stopword removal is enabled but the stopword list is empty".into(),
            ));
        }
        Ok(())
    }
}

/// Reduces one lowercase token to a base form.
///
/// The bundled rule table wins when it has an entry; otherwise a deliberately
/// conservative suffix rule applies: `-ies` → `-y`, a plain plural `-s` is
/// stripped, and `-ing` is stripped when a reasonable stem remains. Rules are
/// applied to a fixed point (bounded) so the result is stable under repeated
/// lemmatization; words the rules do not clearly cover pass through
/// unchanged.
pub fn lemmatize_token(token: &str) -> String {
    let mut current = token.to_string();
    for _ in 0..8 {
        let next = lemmatize_step(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn lemmatize_step(token: &str) -> String {
    if let Some(base) = lemma_table().get(token) {
        return base.clone();
    }
    let n = token.len();
    if n > 4 && token.ends_with("ies") {
        return format!("{}y", &token[..n - 3]);
    }
    if n >= 7 && token.ends_with("ing") {
        return token[..n - 3].to_string();
    }
    if n >= 4
        && token.ends_with('s')
        && !token.ends_with("ss")
        && !token.ends_with("us")
        && !token.ends_with("is")
    {
        return token[..n - 1].to_string();
    }
    token.to_string()
}

/// Runs the preprocessing pipeline and returns the resulting tokens.
///
/// With every flag off this is exactly whitespace tokenization. The
/// whitespace-collapse step only affects the intermediate string form;
/// tokenization always treats a run of whitespace as one separator.
///
/// When both stopword removal and lemmatization are enabled, tokens whose
/// base form lands on a stopword ("willing" → "will") are dropped as well,
/// so the output never contains stopwords and the whole pipeline is
/// idempotent.
pub fn preprocess(text: &str, cfg: &PreprocessConfig) -> Vec<String> {
    let mut s = text.to_string();
    if cfg.lowercase {
        s = s.to_lowercase();
    }
    if cfg.strip_punctuation {
        s = s
            .chars()
            .map(|c| if c.is_ascii_punctuation() { ' ' } else { c })
            .collect();
    }
    if cfg.collapse_whitespace {
        s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    let mut tokens: Vec<String> = s.split_whitespace().map(str::to_string).collect();
    if cfg.remove_stopwords && !cfg.stopword_list.is_empty() {
        tokens.retain(|t| !cfg.stopword_list.contains(t));
    }
    if cfg.lemmatize {
        tokens = tokens.iter().map(|t| lemmatize_token(t)).collect();
        if cfg.remove_stopwords && !cfg.stopword_list.is_empty() {
            tokens.retain(|t| !cfg.stopword_list.contains(t));
        }
    }
    tokens
}
