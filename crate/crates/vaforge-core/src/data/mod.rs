//! Data model for verbal-autopsy interviews: records, the cause taxonomy,
//! label encoding, and validated dataset construction.
//!
//! A [`Dataset`] is immutable after construction and safe to share across
//! threads; the randomized operations over it (splits, folds, subsamples)
//! live in [`split`] and are pure functions of their inputs and a seed.

pub mod load;
pub mod split;

pub use split::{stratified_kfold, stratified_split, subsample_training, Fold, SplitPlan};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Response to one closed interview question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Yes,
    No,
    DontKnow,
    Missing,
}

impl Response {
    /// All responses, in a fixed order.
    pub const ALL: [Response; 4] = [
        Response::Yes,
        Response::No,
        Response::DontKnow,
        Response::Missing,
    ];
}

/// Age group of the deceased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeGroup {
    Adult,
    Other,
}

/// Cause-grouping level of the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    L1,
    L2,
    L3,
}

impl Level {
    /// All levels, in order of granularity.
    pub const ALL: [Level; 3] = [Level::L1, Level::L2, Level::L3];
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::L1 => write!(f, "L1"),
            Level::L2 => write!(f, "L2"),
            Level::L3 => write!(f, "L3"),
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Level> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L1" | "1" => Ok(Level::L1),
            "L2" | "2" => Ok(Level::L2),
            "L3" | "3" => Ok(Level::L3),
            other => Err(Error::Schema(format!(
                "unknown grouping level {other:?} (expected L1, L2, or L3)"
            ))),
        }
    }
}

/// One verbal-autopsy interview: a free-text narrative, closed question
/// responses, and optional cause-of-death labels at three grouping levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VARecord {
    pub id: String,
    pub age_group: AgeGroup,
    #[serde(default)]
    pub narrative: String,
    #[serde(default)]
    pub questions: BTreeMap<String, Response>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause_icd10: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause_level1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause_level2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause_level3: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sufficiency_score: Option<u8>,
}

impl VARecord {
    /// A minimal record with the given id; other fields empty.
    pub fn new(id: impl Into<String>) -> Self {
        VARecord {
            id: id.into(),
            age_group: AgeGroup::Adult,
            narrative: String::new(),
            questions: BTreeMap::new(),
            cause_icd10: None,
            cause_level1: None,
            cause_level2: None,
            cause_level3: None,
            sufficiency_score: None,
        }
    }

    /// The cause label at a grouping level, if assigned.
    pub fn label(&self, level: Level) -> Option<&str> {
        match level {
            Level::L1 => self.cause_level1.as_deref(),
            Level::L2 => self.cause_level2.as_deref(),
            Level::L3 => self.cause_level3.as_deref(),
        }
    }

    /// Fills missing level labels from the taxonomy's ICD-10 mapping.
    pub fn backfill_labels(&mut self, taxonomy: &CauseTaxonomy) {
        let Some(code) = self.cause_icd10.as_deref() else {
            return;
        };
        let Some(mapping) = taxonomy.lookup_icd10(code) else {
            return;
        };
        self.cause_level1
            .get_or_insert_with(|| mapping.level1.clone());
        self.cause_level2
            .get_or_insert_with(|| mapping.level2.clone());
        self.cause_level3
            .get_or_insert_with(|| mapping.level3.clone());
    }
}

/// One row of the ICD-10 → cause-category mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Icd10Mapping {
    pub icd10: String,
    pub level1: String,
    pub level2: String,
    pub level3: String,
}

/// Ordered cause-category lists for the three grouping levels, plus the
/// ICD-10 mapping that ties raw codes to categories.
///
/// Class indices are positions in these lists, so the file order of a
/// user-supplied taxonomy defines the encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseTaxonomy {
    level1: Vec<String>,
    level2: Vec<String>,
    level3: Vec<String>,
    icd10_map: Vec<Icd10Mapping>,
}

/// The default broad cause categories used when a taxonomy supplies no
/// level-3 list of its own.
pub const DEFAULT_LEVEL3: [&str; 6] = [
    "HIV and pulmonary TB",
    "Non-HIV/TB infections",
    "Non-communicable causes",
    "Injuries",
    "Maternal conditions",
    "Indeterminate causes",
];

impl CauseTaxonomy {
    /// Builds a taxonomy, validating that class lists are duplicate-free and
    /// that every mapping target appears in the matching list. An empty
    /// level-3 list falls back to [`DEFAULT_LEVEL3`].
    pub fn new(
        level1: Vec<String>,
        level2: Vec<String>,
        level3: Vec<String>,
        icd10_map: Vec<Icd10Mapping>,
    ) -> Result<Self> {
        let level3 = if level3.is_empty() {
            DEFAULT_LEVEL3.iter().map(|s| s.to_string()).collect()
        } else {
            level3
        };
        for (name, list) in [("level1", &level1), ("level2", &level2), ("level3", &level3)] {
            let mut seen = BTreeSet::new();
            for class in list {
                if !seen.insert(class.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate class {class:?} in taxonomy {name} list"
                    )));
                }
            }
        }
        for mapping in &icd10_map {
            for (name, list, target) in [
                ("level1", &level1, &mapping.level1),
                ("level2", &level2, &mapping.level2),
                ("level3", &level3, &mapping.level3),
            ] {
                if !list.contains(target) {
                    return Err(Error::Label(format!(
                        "icd10 {:?} maps to {target:?}, which is not in the {name} class list",
                        mapping.icd10
                    )));
                }
            }
        }
        Ok(CauseTaxonomy {
            level1,
            level2,
            level3,
            icd10_map,
        })
    }

    /// A taxonomy with only the default level-3 categories.
    pub fn default_level3_only() -> Self {
        CauseTaxonomy::new(Vec::new(), Vec::new(), Vec::new(), Vec::new())
            .expect("default lists are valid")
    }

    /// The ordered class list for a grouping level.
    pub fn classes(&self, level: Level) -> &[String] {
        match level {
            Level::L1 => &self.level1,
            Level::L2 => &self.level2,
            Level::L3 => &self.level3,
        }
    }

    /// The mapping rows.
    pub fn icd10_map(&self) -> &[Icd10Mapping] {
        &self.icd10_map
    }

    /// Finds the mapping for an ICD-10 code by exact string match.
    pub fn lookup_icd10(&self, code: &str) -> Option<&Icd10Mapping> {
        self.icd10_map.iter().find(|m| m.icd10 == code)
    }

    /// Class index of `label` at `level` (its position in the class list).
    pub fn encode(&self, level: Level, label: &str) -> Option<usize> {
        self.classes(level).iter().position(|c| c == label)
    }

    /// Class label for an index at `level`.
    pub fn decode(&self, level: Level, index: usize) -> Option<&str> {
        self.classes(level).get(index).map(String::as_str)
    }
}

/// An immutable, validated collection of records bound to a taxonomy and a
/// working label level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<VARecord>,
    taxonomy: CauseTaxonomy,
    label_level: Level,
}

impl Dataset {
    /// Validates records against the taxonomy and builds a dataset.
    ///
    /// Checks every record, not just those labeled at `label_level`: ids must
    /// be nonempty and unique, every assigned label at every level must be a
    /// taxonomy class, and sufficiency scores must lie in 1..=5.
    pub fn new(
        records: Vec<VARecord>,
        taxonomy: CauseTaxonomy,
        label_level: Level,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, rec) in records.iter().enumerate() {
            if rec.id.is_empty() {
                return Err(Error::Schema(format!("record at position {i} has an empty id")));
            }
            if !seen.insert(rec.id.as_str()) {
                return Err(Error::DuplicateId(rec.id.clone()));
            }
            for level in Level::ALL {
                if let Some(label) = rec.label(level) {
                    if taxonomy.encode(level, label).is_none() {
                        return Err(Error::Label(format!(
                            "record {:?}: label {label:?} is not a {level} taxonomy class",
                            rec.id
                        )));
                    }
                }
            }
            if let Some(score) = rec.sufficiency_score {
                if !(1..=5).contains(&score) {
                    return Err(Error::Schema(format!(
                        "record {:?}: sufficiency_score {score} is outside 1..=5",
                        rec.id
                    )));
                }
            }
        }
        Ok(Dataset {
            records,
            taxonomy,
            label_level,
        })
    }

    /// All records, in load order.
    pub fn records(&self) -> &[VARecord] {
        &self.records
    }

    /// The bound taxonomy.
    pub fn taxonomy(&self) -> &CauseTaxonomy {
        &self.taxonomy
    }

    /// The working label level.
    pub fn label_level(&self) -> Level {
        self.label_level
    }

    /// The ordered class list at the working level.
    pub fn classes(&self) -> &[String] {
        self.taxonomy.classes(self.label_level)
    }

    /// Number of records.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Whether the dataset holds no records.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The record's label at the working level.
    pub fn label_of<'a>(&self, rec: &'a VARecord) -> Option<&'a str> {
        rec.label(self.label_level)
    }

    /// Class index of the record's label at the working level.
    pub fn class_of(&self, rec: &VARecord) -> Option<usize> {
        self.label_of(rec)
            .and_then(|l| self.taxonomy.encode(self.label_level, l))
    }

    /// Positions of records that carry a label at the working level.
    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.records.len())
            .filter(|&i| self.label_of(&self.records[i]).is_some())
            .collect()
    }

    /// Ids of records that carry a label at the working level.
    pub fn labeled_ids(&self) -> Vec<String> {
        self.labeled_indices()
            .into_iter()
            .map(|i| self.records[i].id.clone())
            .collect()
    }

    /// Per-class record counts at the working level, in class order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes().len()];
        for rec in &self.records {
            if let Some(c) = self.class_of(rec) {
                counts[c] += 1;
            }
        }
        counts
    }

    /// A new dataset holding the listed records, in the given order.
    pub fn subset_by_ids(&self, ids: &[String]) -> Result<Dataset> {
        let by_id: BTreeMap<&str, &VARecord> =
            self.records.iter().map(|r| (r.id.as_str(), r)).collect();
        let mut records = Vec::with_capacity(ids.len());
        for id in ids {
            let rec = by_id.get(id.as_str()).ok_or_else(|| {
                Error::Alignment(format!("id {id:?} is not in the dataset"))
            })?;
            records.push((*rec).clone());
        }
        Dataset::new(records, self.taxonomy.clone(), self.label_level)
    }

    /// The same records re-bound to a different working level.
    pub fn with_level(&self, level: Level) -> Dataset {
        Dataset {
            records: self.records.clone(),
            taxonomy: self.taxonomy.clone(),
            label_level: level,
        }
    }
}
