//! Run configuration: the JSON schema every subcommand reads.
//!
//! A config file is a single JSON object:
//!
//! ```json
//! {
//!   "records": ["data/records.json"],
//!   "taxonomy": "data/taxonomy.json",
//!   "template_table": "data/templates.csv",
//!   "label_level": "L3",
//!   "split": { "seed": 7, "test_fraction": 0.2 },
//!   "learners": [
//!     { "name": "text-lr", "features": "narrative",
//!       "spec": { "kind": "logreg", "hyperparams": {}, "seed": 7 } }
//!   ],
//!   "fusion": "soft_vote",
//!   "narrative": { ... featurizer settings, optional ... },
//!   "stacking": { "k_folds": 5, "meta": { "kind": "logreg", ... } },
//!   "hpo": { "n_trials": 30, "k_folds": 5, "seed": 7 },
//!   "ensemble": { "predictions": ["out/a/predictions.csv", "out/b/predictions.csv"] },
//!   "sufficiency": { "test_fraction": 0.2 },
//!   "out_dir": "out/run1"
//! }
//! ```
//!
//! `records` files hold JSON arrays of interview records; `taxonomy` holds
//! the cause-category lists (`level1`/`level2`/`level3` string arrays plus
//! an `icd10_map`). `template_table` is the question-to-text CSV; when
//! omitted, the built-in starter table is used.
//!
//! The `--config PATH` flag names the file; when absent, the
//! `VAFORGE_CONFIG` environment variable is consulted. `--seed` overrides
//! every seed in the file (split, learners, HPO, sufficiency) for
//! one-knob reproducibility, and `--out` overrides `out_dir`. A run
//! manifest written by a previous command is also accepted wherever a
//! config is expected, making every artifact replayable.

use crate::error::validation;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use vaforge_core::artifact::Artifact;
use vaforge_core::data::Level;
use vaforge_core::features::NarrativeFeaturizerConfig;
use vaforge_core::hpo::{Direction, MedianPruner, ParamSpec};
use vaforge_core::learners::{LearnerKind, LearnerSpec};

/// Artifact kind tag for replayable run manifests.
pub const MANIFEST_KIND: &str = "vaforge.run-manifest";
/// Manifest format version.
pub const MANIFEST_VERSION: u32 = 1;

/// Which feature block a learner consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpace {
    /// TF–IDF (+ SVD) features of the narrative text.
    Narrative,
    /// Encoded closed-question responses.
    Questions,
    /// Narrative and question blocks side by side.
    Fused,
    /// Narrative text extended with rendered question sentences, then
    /// featurized as text.
    DataFused,
}

impl Default for FeatureSpace {
    fn default() -> Self {
        FeatureSpace::Fused
    }
}

/// How modalities / models are combined in `run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionStrategy {
    /// First learner only, on its configured feature space.
    Unimodal,
    /// First learner on text fused at the input level (questions rendered
    /// into the narrative).
    Data,
    /// First learner on concatenated narrative + question features.
    Feature,
    /// Mean of all learners' predicted probabilities.
    SoftVote,
    /// Out-of-fold stacking over all learners with a meta-learner.
    Stacking,
}

impl Default for FusionStrategy {
    fn default() -> Self {
        FusionStrategy::Unimodal
    }
}

/// One base learner: an optional display name, the feature space it
/// consumes, and its full specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub features: FeatureSpace,
    pub spec: LearnerSpec,
}

impl LearnerEntry {
    /// Display name: the explicit name, or the learner kind.
    pub fn display_name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!("{:?}", self.spec.kind).to_lowercase(),
        }
    }
}

/// Hold-out split settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSettings {
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            seed: 0,
            test_fraction: 0.2,
        }
    }
}

/// Stacking-specific settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackingSettings {
    /// Folds used to generate out-of-fold base predictions.
    pub k_folds: usize,
    /// Meta-learner; logistic regression when omitted.
    pub meta: Option<LearnerSpec>,
}

impl Default for StackingSettings {
    fn default() -> Self {
        StackingSettings {
            k_folds: 5,
            meta: None,
        }
    }
}

/// Settings for the `hpo` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HpoSettings {
    /// Named learner entry to tune; the first entry when omitted.
    pub learner: Option<String>,
    pub n_trials: usize,
    pub k_folds: usize,
    pub seed: u64,
    pub direction: Direction,
    pub pruner: MedianPruner,
    /// Explicit search space; when omitted, the preset space for the
    /// learner's kind is used.
    pub space: Option<Vec<ParamSpec>>,
}

impl Default for HpoSettings {
    fn default() -> Self {
        HpoSettings {
            learner: None,
            n_trials: 30,
            k_folds: 5,
            seed: 0,
            direction: Direction::Maximize,
            pruner: MedianPruner::default(),
            space: None,
        }
    }
}

/// Settings for `ensemble` and `ablation`: saved prediction matrices to
/// combine by soft voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSettings {
    /// Probability-matrix CSV files (as written by `run`).
    pub predictions: Vec<PathBuf>,
    /// Display names per file; file stems when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

/// Settings for the `sufficiency` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SufficiencySettings {
    pub test_fraction: f64,
    /// Split/model seed; the split seed when omitted.
    pub seed: Option<u64>,
}

impl Default for SufficiencySettings {
    fn default() -> Self {
        SufficiencySettings {
            test_fraction: 0.2,
            seed: None,
        }
    }
}

/// The full run configuration. See the module docs for the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub records: Vec<PathBuf>,
    pub taxonomy: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_table: Option<PathBuf>,
    #[serde(default = "default_level")]
    pub label_level: String,
    #[serde(default)]
    pub split: SplitSettings,
    #[serde(default)]
    pub learners: Vec<LearnerEntry>,
    #[serde(default)]
    pub fusion: FusionStrategy,
    #[serde(default)]
    pub narrative: NarrativeFeaturizerConfig,
    #[serde(default)]
    pub stacking: StackingSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hpo: Option<HpoSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sufficiency: Option<SufficiencySettings>,
    pub out_dir: PathBuf,
}

fn default_level() -> String {
    "L3".to_string()
}

/// A manifest payload: the command that produced it plus the resolved
/// config, so any artifact can be regenerated with the same invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
}

impl RunConfig {
    /// Parses a config file, accepting either a bare config object or a
    /// run manifest written by a previous command.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&raw)
            .map_err(|e| validation(format!("config file {} is not JSON: {e}", path.display())))?;
        let config = if value.get("kind").and_then(|k| k.as_str()) == Some(MANIFEST_KIND) {
            let envelope: Artifact<RunManifest> = serde_json::from_value(value).map_err(|e| {
                validation(format!(
                    "manifest {} does not match the expected schema: {e}",
                    path.display()
                ))
            })?;
            envelope.payload.config
        } else {
            serde_json::from_value(value).map_err(|e| {
                validation(format!(
                    "config {} does not match the expected schema: {e}",
                    path.display()
                ))
            })?
        };
        Ok(config)
    }

    /// Applies the global flag overrides. `--seed` rewrites every seed in
    /// the config so a single flag pins the whole pipeline.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        if let Some(seed) = seed {
            self.split.seed = seed;
            for entry in &mut self.learners {
                entry.spec.seed = seed;
            }
            if let Some(hpo) = &mut self.hpo {
                hpo.seed = seed;
            }
            if let Some(s) = &mut self.sufficiency {
                s.seed = Some(seed);
            }
            if let Some(meta) = &mut self.stacking.meta {
                meta.seed = seed;
            }
        }
        if let Some(out) = out {
            self.out_dir = out;
        }
    }

    /// The working label level, parsed.
    pub fn level(&self) -> Result<Level> {
        Level::from_str(&self.label_level)
            .map_err(|e| validation(format!("label_level: {e}")).into())
    }

    /// The meta-learner spec for stacking (logistic regression default).
    pub fn meta_spec(&self) -> LearnerSpec {
        self.stacking
            .meta
            .clone()
            .unwrap_or_else(|| LearnerSpec::new(LearnerKind::Logreg, self.split.seed))
    }

    /// The learner entry a single-model command should use: the one named
    /// `name`, or the first entry.
    pub fn entry_named(&self, name: Option<&str>) -> Result<&LearnerEntry> {
        match name {
            None => self.learners.first().ok_or_else(|| {
                validation("config has no learners; at least one is required").into()
            }),
            Some(n) => self
                .learners
                .iter()
                .find(|e| e.display_name() == n)
                .ok_or_else(|| validation(format!("no learner named {n:?} in config")).into()),
        }
    }
}

/// Resolves the config path from `--config` or `VAFORGE_CONFIG`.
pub fn resolve_config_path(flag: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p);
    }
    if let Ok(env) = std::env::var("VAFORGE_CONFIG") {
        if !env.is_empty() {
            return Ok(PathBuf::from(env));
        }
    }
    Err(validation("no config: pass --config PATH or set VAFORGE_CONFIG").into())
}
