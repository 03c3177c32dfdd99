//! Tree-structured Parzen estimator (TPE) sampling over mixed search
//! spaces.
//!
//! The sampler is deliberately pinned so studies are reproducible:
//!
//! - the first [`N_STARTUP`] trials are sampled uniformly (in log space for
//!   log-uniform parameters);
//! - afterwards the scored history is split at the γ = [`GAMMA`] quantile
//!   into "good" and "bad" sets, [`N_CANDIDATES`] candidates are drawn from
//!   the good set's density, and the candidate with the highest good/bad
//!   density ratio wins;
//! - continuous densities are Gaussian kernel mixtures with Scott's
//!   bandwidth in the transformed space, one independent density per
//!   dimension; categorical densities are Laplace-smoothed count weights.

use super::{Direction, TrialConfig, TrialRecord};
use crate::error::{Error, Result};
use crate::learners::HyperValue;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Number of leading trials sampled uniformly before TPE takes over.
pub const N_STARTUP: usize = 10;
/// Fraction of the scored history treated as "good".
pub const GAMMA: f64 = 0.25;
/// Candidates drawn and ranked per TPE step.
pub const N_CANDIDATES: usize = 24;

/// Sampling strategy for one search dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    /// Uniform over `[lo, hi)` in log space; requires `0 < lo < hi`.
    LogUniform { lo: f64, hi: f64 },
    /// Uniform over `[lo, hi)`; requires `lo < hi`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform over an explicit nonempty value list.
    Categorical { values: Vec<HyperValue> },
    /// Uniform over the integers `lo..=hi`; requires `lo < hi`.
    Integer { lo: i64, hi: i64 },
}

/// One named dimension of a search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

impl ParamSpec {
    /// A log-uniform dimension; errors unless `0 < lo < hi`.
    pub fn log_uniform(name: &str, lo: f64, hi: f64) -> Result<Self> {
        let spec = ParamSpec {
            name: name.to_string(),
            kind: ParamKind::LogUniform { lo, hi },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A uniform dimension; errors unless `lo < hi`.
    pub fn uniform(name: &str, lo: f64, hi: f64) -> Result<Self> {
        let spec = ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Uniform { lo, hi },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A categorical dimension; errors on an empty value list.
    pub fn categorical(name: &str, values: Vec<HyperValue>) -> Result<Self> {
        let spec = ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Categorical { values },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A categorical dimension over integers.
    pub fn categorical_ints(name: &str, values: &[i64]) -> Result<Self> {
        ParamSpec::categorical(name, values.iter().map(|&v| HyperValue::Int(v)).collect())
    }

    /// A categorical dimension over floats.
    pub fn categorical_floats(name: &str, values: &[f64]) -> Result<Self> {
        ParamSpec::categorical(name, values.iter().map(|&v| HyperValue::Float(v)).collect())
    }

    /// A categorical dimension over strings.
    pub fn categorical_texts(name: &str, values: &[&str]) -> Result<Self> {
        ParamSpec::categorical(
            name,
            values
                .iter()
                .map(|v| HyperValue::Text(v.to_string()))
                .collect(),
        )
    }

    /// An integer-range dimension; errors unless `lo < hi`.
    pub fn integer(name: &str, lo: i64, hi: i64) -> Result<Self> {
        let spec = ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Integer { lo, hi },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the bound invariants of this dimension.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ParamKind::LogUniform { lo, hi } => {
                if !(*lo > 0.0 && lo.is_finite()) {
                    return Err(Error::Range {
                        name: format!("{}.lo", self.name),
                        value: *lo,
                        expected: "a positive finite number (log-uniform)".into(),
                    });
                }
                if !(lo < hi && hi.is_finite()) {
                    return Err(Error::Range {
                        name: format!("{}.hi", self.name),
                        value: *hi,
                        expected: format!("a finite number above lo = {lo}"),
                    });
                }
            }
            ParamKind::Uniform { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Range {
                        name: format!("{}.hi", self.name),
                        value: *hi,
                        expected: format!("a finite number above lo = {lo}"),
                    });
                }
            }
            ParamKind::Categorical { values } => {
                if values.is_empty() {
                    return Err(Error::Schema(format!(
                        "categorical parameter {:?} has no values",
                        self.name
                    )));
                }
            }
            ParamKind::Integer { lo, hi } => {
                if lo >= hi {
                    return Err(Error::Range {
                        name: format!("{}.hi", self.name),
                        value: *hi as f64,
                        expected: format!("an integer above lo = {lo}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A standard normal draw via the Box–Muller transform.
///
/// `rand` alone does not ship non-uniform distributions and the build
/// environment pins the dependency set, so the two-line classic is used.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A one-dimensional Gaussian kernel mixture over transformed values.
struct Kde {
    points: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    /// Fits a KDE with Scott's rule `h = σ·n^(-1/5)` in transformed space.
    /// Degenerate spreads fall back to a tenth of the dimension's range so
    /// the bandwidth stays positive.
    fn fit(points: Vec<f64>, range: f64) -> Kde {
        let n = points.len() as f64;
        let mean = points.iter().sum::<f64>() / n;
        let var = points.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
        let mut sigma = var.sqrt();
        if sigma < 1e-12 * range {
            sigma = range / 10.0;
        }
        Kde {
            points,
            bandwidth: sigma * n.powf(-0.2),
        }
    }

    fn log_density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (h * (std::f64::consts::TAU).sqrt());
        let mean_density = self
            .points
            .iter()
            .map(|p| norm * (-0.5 * ((x - p) / h).powi(2)).exp())
            .sum::<f64>()
            / self.points.len() as f64;
        mean_density.max(1e-300).ln()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let center = self.points[rng.random_range(0..self.points.len())];
        center + self.bandwidth * standard_normal(rng)
    }
}

/// The transformed-space bounds of a continuous or integer dimension.
fn transformed_bounds(kind: &ParamKind) -> (f64, f64) {
    match kind {
        ParamKind::LogUniform { lo, hi } => (lo.ln(), hi.ln()),
        ParamKind::Uniform { lo, hi } => (*lo, *hi),
        ParamKind::Integer { lo, hi } => (*lo as f64, *hi as f64),
        ParamKind::Categorical { .. } => unreachable!("categorical has no continuous bounds"),
    }
}

/// Maps a transformed-space value back to a hyperparameter value, clipped
/// to the dimension's bounds.
fn from_transformed(kind: &ParamKind, x: f64) -> HyperValue {
    match kind {
        ParamKind::LogUniform { lo, hi } => HyperValue::Float(x.exp().clamp(*lo, *hi)),
        ParamKind::Uniform { lo, hi } => HyperValue::Float(x.clamp(*lo, *hi)),
        ParamKind::Integer { lo, hi } => {
            HyperValue::Int((x.round() as i64).clamp(*lo, *hi))
        }
        ParamKind::Categorical { .. } => unreachable!("categorical is not transformed"),
    }
}

/// The transformed-space value of a config entry, if present and numeric.
fn transformed_value(kind: &ParamKind, value: &HyperValue) -> Option<f64> {
    let raw = match value {
        HyperValue::Int(v) => *v as f64,
        HyperValue::Float(v) => *v,
        HyperValue::Text(_) => return None,
    };
    match kind {
        ParamKind::LogUniform { .. } => (raw > 0.0).then(|| raw.ln()),
        ParamKind::Uniform { .. } | ParamKind::Integer { .. } => Some(raw),
        ParamKind::Categorical { .. } => None,
    }
}

/// One uniform draw for a dimension (log-space for log-uniform).
fn sample_uniform(spec: &ParamSpec, rng: &mut ChaCha8Rng) -> HyperValue {
    match &spec.kind {
        ParamKind::LogUniform { lo, hi } => {
            let x = rng.random_range(lo.ln()..hi.ln());
            HyperValue::Float(x.exp().clamp(*lo, *hi))
        }
        ParamKind::Uniform { lo, hi } => HyperValue::Float(rng.random_range(*lo..*hi)),
        ParamKind::Categorical { values } => values[rng.random_range(0..values.len())].clone(),
        ParamKind::Integer { lo, hi } => HyperValue::Int(rng.random_range(*lo..=*hi)),
    }
}

/// The score a trial contributes to the TPE history: the final score when
/// complete, otherwise the last interim value (so pruned trials still
/// steer the sampler away from their region).
fn observable_score(trial: &TrialRecord) -> Option<f64> {
    trial
        .final_score
        .or_else(|| trial.interim_scores.last().copied())
        .filter(|s| s.is_finite())
}

/// Laplace-smoothed category weights of the configs that chose each value.
fn categorical_weights(values: &[HyperValue], name: &str, configs: &[&TrialConfig]) -> Vec<f64> {
    let mut counts = vec![0usize; values.len()];
    for config in configs {
        if let Some(v) = config.get(name) {
            if let Some(i) = values.iter().position(|c| c == v) {
                counts[i] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&c| (c as f64 + 1.0) / (total as f64 + values.len() as f64))
        .collect()
}

fn sample_weighted(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Per-dimension density pair used to draw and rank candidates.
enum DimModel {
    Continuous { good: Kde, bad: Kde },
    Categorical { good: Vec<f64>, bad: Vec<f64> },
    /// No usable history for this dimension; fall back to uniform.
    Uniform,
}

/// Samples one configuration.
///
/// Until [`N_STARTUP`] history entries exist, every dimension is drawn
/// uniformly. Afterwards, scored history is split at the γ-quantile and
/// candidates are ranked by the good/bad density ratio. Sampled values
/// always satisfy their dimension's bounds.
pub fn sample(
    space: &[ParamSpec],
    history: &[TrialRecord],
    direction: Direction,
    rng: &mut ChaCha8Rng,
) -> Result<TrialConfig> {
    if space.is_empty() {
        return Err(Error::Schema("search space has no dimensions".into()));
    }
    for spec in space {
        spec.validate()?;
    }

    let mut scored: Vec<(&TrialConfig, f64)> = history
        .iter()
        .filter_map(|t| observable_score(t).map(|s| (&t.config, s)))
        .collect();
    if history.len() < N_STARTUP || scored.len() < 2 {
        return Ok(space
            .iter()
            .map(|spec| (spec.name.clone(), sample_uniform(spec, rng)))
            .collect());
    }

    // Stable sort from best to worst keeps ties in trial order, so the
    // split is deterministic.
    match direction {
        Direction::Maximize => scored.sort_by(|a, b| b.1.total_cmp(&a.1)),
        Direction::Minimize => scored.sort_by(|a, b| a.1.total_cmp(&b.1)),
    }
    let n_good = ((GAMMA * scored.len() as f64).ceil() as usize).max(1);
    let n_good = n_good.min(scored.len() - 1);
    let good: Vec<&TrialConfig> = scored[..n_good].iter().map(|(c, _)| *c).collect();
    let bad: Vec<&TrialConfig> = scored[n_good..].iter().map(|(c, _)| *c).collect();

    let models: Vec<DimModel> = space
        .iter()
        .map(|spec| match &spec.kind {
            ParamKind::Categorical { values } => DimModel::Categorical {
                good: categorical_weights(values, &spec.name, &good),
                bad: categorical_weights(values, &spec.name, &bad),
            },
            kind => {
                let pull = |configs: &[&TrialConfig]| -> Vec<f64> {
                    configs
                        .iter()
                        .filter_map(|c| c.get(&spec.name))
                        .filter_map(|v| transformed_value(kind, v))
                        .collect()
                };
                let good_pts = pull(&good);
                let bad_pts = pull(&bad);
                if good_pts.is_empty() || bad_pts.is_empty() {
                    DimModel::Uniform
                } else {
                    let (lo, hi) = transformed_bounds(kind);
                    DimModel::Continuous {
                        good: Kde::fit(good_pts, hi - lo),
                        bad: Kde::fit(bad_pts, hi - lo),
                    }
                }
            }
        })
        .collect();

    let mut best: Option<(f64, TrialConfig)> = None;
    for _ in 0..N_CANDIDATES {
        let mut config = TrialConfig::new();
        let mut log_ratio = 0.0;
        for (spec, model) in space.iter().zip(&models) {
            match model {
                DimModel::Continuous { good, bad } => {
                    let (lo, hi) = transformed_bounds(&spec.kind);
                    let x = good.sample(rng).clamp(lo, hi);
                    log_ratio += good.log_density(x) - bad.log_density(x);
                    config.insert(spec.name.clone(), from_transformed(&spec.kind, x));
                }
                DimModel::Categorical { good, bad } => {
                    let ParamKind::Categorical { values } = &spec.kind else {
                        unreachable!("categorical model built from categorical kind");
                    };
                    let i = sample_weighted(good, rng);
                    log_ratio += good[i].ln() - bad[i].ln();
                    config.insert(spec.name.clone(), values[i].clone());
                }
                DimModel::Uniform => {
                    config.insert(spec.name.clone(), sample_uniform(spec, rng));
                }
            }
        }
        // Strict improvement keeps the first candidate on ties.
        if best.as_ref().is_none_or(|(b, _)| log_ratio > *b) {
            best = Some((log_ratio, config));
        }
    }
    Ok(best.expect("at least one candidate drawn").1)
}
