//! Trial-based hyperparameter optimization: TPE-style sampling, median
//! pruning, and a cross-validated weighted-F1 objective.
//!
//! A study runs a fixed number of trials. Each trial samples a
//! configuration ([`tpe::sample`]), evaluates it through a caller-supplied
//! objective, and may be stopped early by the median pruner when its
//! interim scores trail the field. The best configuration is the
//! best-scoring *complete* trial; pruned trials are never selected.
//!
//! Trials are evaluated sequentially (sampling must observe all prior
//! results); parallelism lives inside objectives, e.g. fold jobs. Per-trial
//! RNG seed is `study seed + trial id`, so a study is reproducible
//! end-to-end.

pub mod presets;
pub mod tpe;

pub use tpe::{sample, ParamKind, ParamSpec};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::fusion::labels_for;
use crate::learners::{fit, HyperValue, LearnerSpec};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

/// A sampled configuration: hyperparameter name → value.
pub type TrialConfig = BTreeMap<String, HyperValue>;

/// Whether larger or smaller objective values win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Whether `a` is strictly better than `b` under this direction.
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

/// Stops trials whose interim score falls strictly below (above, when
/// minimizing) the median of other trials' scores at the same step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedianPruner {
    /// Steps that are never pruned, counted from 1.
    pub warmup_steps: usize,
    /// Completed trials required before any pruning happens.
    pub startup_trials: usize,
}

impl Default for MedianPruner {
    fn default() -> Self {
        MedianPruner {
            warmup_steps: 1,
            startup_trials: 5,
        }
    }
}

impl MedianPruner {
    /// A pruner that never fires.
    pub fn disabled() -> Self {
        MedianPruner {
            warmup_steps: usize::MAX,
            startup_trials: usize::MAX,
        }
    }
}

/// Lifecycle state of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialState {
    Running,
    Complete,
    Pruned,
    Failed,
}

/// One trial: its sampled configuration, per-step interim scores, final
/// score (complete trials only), and state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub config: TrialConfig,
    pub interim_scores: Vec<f64>,
    pub final_score: Option<f64>,
    pub state: TrialState,
}

/// Study-level settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_trials: usize,
    pub direction: Direction,
    #[serde(default)]
    pub pruner: MedianPruner,
    #[serde(default)]
    pub seed: u64,
}

impl StudyConfig {
    /// A study with the default median pruner.
    pub fn new(n_trials: usize, direction: Direction, seed: u64) -> Self {
        StudyConfig {
            n_trials,
            direction,
            pruner: MedianPruner::default(),
            seed,
        }
    }

    /// Checks `n_trials ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::Range {
                name: "n_trials".into(),
                value: self.n_trials as f64,
                expected: "at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Median-pruning decision for a step that just reported `interim.last()`.
fn should_prune_at(
    interim: &[f64],
    history: &[TrialRecord],
    pruner: &MedianPruner,
    direction: Direction,
) -> bool {
    let step = interim.len();
    if step == 0 || step <= pruner.warmup_steps {
        return false;
    }
    let completed = history
        .iter()
        .filter(|t| t.state == TrialState::Complete)
        .count();
    if completed < pruner.startup_trials {
        return false;
    }
    let mut others: Vec<f64> = history
        .iter()
        .filter_map(|t| t.interim_scores.get(step - 1).copied())
        .filter(|s| s.is_finite())
        .collect();
    if others.is_empty() {
        return false;
    }
    others.sort_by(f64::total_cmp);
    let mid = others.len() / 2;
    let median = if others.len() % 2 == 1 {
        others[mid]
    } else {
        0.5 * (others[mid - 1] + others[mid])
    };
    direction.better(median, *interim.last().expect("step ≥ 1"))
}

/// Whether a running trial should be stopped after its latest report.
///
/// True iff the step count exceeds the pruner's warmup, at least
/// `startup_trials` trials have completed, and the trial's score at this
/// step is strictly worse than the median of other trials' scores at the
/// same step.
pub fn should_prune(
    trial: &TrialRecord,
    history: &[TrialRecord],
    pruner: &MedianPruner,
    direction: Direction,
) -> bool {
    should_prune_at(&trial.interim_scores, history, pruner, direction)
}

/// Hands interim scores from an objective to the pruner.
///
/// Objectives call [`Reporter::report`] once per step (e.g. per fold); a
/// `true` return asks the objective to stop and yield `None`.
pub struct Reporter<'a> {
    history: &'a [TrialRecord],
    pruner: MedianPruner,
    direction: Direction,
    interim: Vec<f64>,
    stopped: bool,
}

impl<'a> Reporter<'a> {
    /// A reporter over the given completed-trial history.
    pub fn new(history: &'a [TrialRecord], pruner: MedianPruner, direction: Direction) -> Self {
        Reporter {
            history,
            pruner,
            direction,
            interim: Vec::new(),
            stopped: false,
        }
    }

    /// Records a step score; returns whether the trial should stop.
    pub fn report(&mut self, score: f64) -> bool {
        if self.stopped {
            return true;
        }
        self.interim.push(score);
        if should_prune_at(&self.interim, self.history, &self.pruner, self.direction) {
            self.stopped = true;
        }
        self.stopped
    }

    /// Scores reported so far.
    pub fn interim_scores(&self) -> &[f64] {
        &self.interim
    }

    /// Whether the pruner has asked this trial to stop.
    pub fn stopped(&self) -> bool {
        self.stopped
    }
}

/// Runs a study and returns the best complete trial's configuration along
/// with the full trial log.
///
/// The objective returns `Ok(Some(score))` for a finished trial,
/// `Ok(None)` when it honored a prune signal, and `Err` for a failure;
/// failures are recorded and the study continues. A trial that finishes
/// despite a prune signal, or returns a non-finite score, is recorded as
/// pruned or failed respectively and never selected.
pub fn run_study<O>(
    mut objective: O,
    space: &[ParamSpec],
    study: &StudyConfig,
) -> Result<(TrialConfig, Vec<TrialRecord>)>
where
    O: FnMut(&TrialConfig, &mut Reporter) -> Result<Option<f64>>,
{
    study.validate()?;
    let mut records: Vec<TrialRecord> = Vec::with_capacity(study.n_trials);
    for trial_id in 0..study.n_trials {
        let mut rng = ChaCha8Rng::seed_from_u64(study.seed.wrapping_add(trial_id as u64));
        let config = sample(space, &records, study.direction, &mut rng)?;
        let (outcome, interim, stopped) = {
            let mut reporter = Reporter::new(&records, study.pruner.clone(), study.direction);
            let outcome = objective(&config, &mut reporter);
            (outcome, reporter.interim, reporter.stopped)
        };
        let (final_score, state) = match outcome {
            Err(_) => (None, TrialState::Failed),
            Ok(None) => (None, TrialState::Pruned),
            Ok(Some(_)) if stopped => (None, TrialState::Pruned),
            Ok(Some(score)) if !score.is_finite() => (None, TrialState::Failed),
            Ok(Some(score)) => (Some(score), TrialState::Complete),
        };
        records.push(TrialRecord {
            trial_id,
            config,
            interim_scores: interim,
            final_score,
            state,
        });
    }

    let mut best: Option<&TrialRecord> = None;
    for record in &records {
        if record.state != TrialState::Complete {
            continue;
        }
        let score = record.final_score.expect("complete trials have a score");
        // Strict comparison keeps the earliest trial on ties.
        if best.is_none_or(|b| {
            study
                .direction
                .better(score, b.final_score.expect("complete"))
        }) {
            best = Some(record);
        }
    }
    let best = best.ok_or(Error::AllTrialsPruned)?;
    Ok((best.config.clone(), records))
}

/// Builds a cross-validation objective: mean validation weighted F1 over
/// stratified folds, reporting each fold's score for pruning.
///
/// The folds are computed once from `template.seed`, so every trial in a
/// study sees the same splits. Each trial overlays its sampled config on
/// `template`; fold models get seed `template.seed + fold index`.
pub fn cv_objective<'a, F: Scalar>(
    template: &'a LearnerSpec,
    ds: &'a Dataset,
    features: &'a FeatureMatrix<F>,
    k: usize,
) -> Result<impl FnMut(&TrialConfig, &mut Reporter) -> Result<Option<f64>> + 'a> {
    let folds = crate::data::stratified_kfold(ds, k, template.seed)?;
    Ok(move |config: &TrialConfig, reporter: &mut Reporter| {
        let mut spec = template.clone();
        for (name, value) in config {
            spec.hyperparams.insert(name.clone(), value.clone());
        }
        spec.validate()?;
        let mut scores = Vec::with_capacity(folds.len());
        for (i, fold) in folds.iter().enumerate() {
            let mut fold_spec = spec.clone();
            fold_spec.seed = template.seed + i as u64;
            let x_train = features.select_ids(&fold.train_ids)?;
            let y_train = labels_for(ds, &fold.train_ids)?;
            let model = fit(&fold_spec, &x_train, &y_train)?;
            let x_val = features.select_ids(&fold.val_ids)?;
            let probs = model.predict_proba(&x_val)?;
            let y_val = labels_for(ds, &fold.val_ids)?;
            let (report, _) = crate::metrics::evaluate(&y_val, &probs)?;
            let f1 = report.weighted.f1.to_f64_lossy();
            scores.push(f1);
            if reporter.report(f1) {
                return Ok(None);
            }
        }
        Ok(Some(scores.iter().sum::<f64>() / scores.len() as f64))
    })
}

/// Writes the trial log as JSON lines, one record per line.
pub fn write_study_log(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a trial log written by [`write_study_log`].
pub fn read_study_log(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, format!("bad trial record: {e}")))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CauseTaxonomy, Level, VARecord};
    use crate::learners::LearnerKind;
    use crate::linalg::DenseMatrix;
    use rand::Rng;

    fn trial(id: usize, interim: Vec<f64>, final_score: Option<f64>, state: TrialState) -> TrialRecord {
        TrialRecord {
            trial_id: id,
            config: TrialConfig::new(),
            interim_scores: interim,
            final_score,
            state,
        }
    }

    fn completed(id: usize, interim: Vec<f64>) -> TrialRecord {
        let last = *interim.last().unwrap();
        trial(id, interim, Some(last), TrialState::Complete)
    }

    #[test]
    fn pruner_startup_guard_blocks_early_pruning() {
        let pruner = MedianPruner {
            warmup_steps: 0,
            startup_trials: 5,
        };
        let history: Vec<TrialRecord> = (0..4).map(|i| completed(i, vec![0.9, 0.9])).collect();
        let candidate = trial(9, vec![0.0], None, TrialState::Running);
        assert!(!should_prune(&candidate, &history, &pruner, Direction::Maximize));
    }

    #[test]
    fn below_median_after_warmup_is_pruned() {
        let pruner = MedianPruner {
            warmup_steps: 2,
            startup_trials: 3,
        };
        let history = vec![
            completed(0, vec![0.5, 0.6, 0.7]),
            completed(1, vec![0.4, 0.5, 0.6]),
            completed(2, vec![0.6, 0.7, 0.8]),
        ];
        // Step 3 score 0.5 < median(0.7, 0.6, 0.8) = 0.7 → prune.
        let candidate = trial(3, vec![0.9, 0.9, 0.5], None, TrialState::Running);
        assert!(should_prune(&candidate, &history, &pruner, Direction::Maximize));
        // Steps 1–2 are inside warmup even with a terrible score.
        let warm = trial(4, vec![0.0, 0.0], None, TrialState::Running);
        assert!(!should_prune(&warm, &history, &pruner, Direction::Maximize));
    }

    #[test]
    fn best_so_far_trial_is_never_pruned() {
        let pruner = MedianPruner {
            warmup_steps: 0,
            startup_trials: 1,
        };
        let history = vec![
            completed(0, vec![0.5, 0.6, 0.7]),
            completed(1, vec![0.3, 0.4, 0.5]),
        ];
        for step in 1..=3 {
            let interim: Vec<f64> = (0..step).map(|s| 0.8 + s as f64 * 0.05).collect();
            let candidate = trial(2, interim, None, TrialState::Running);
            assert!(!should_prune(&candidate, &history, &pruner, Direction::Maximize));
        }
    }

    #[test]
    fn minimize_direction_flips_the_comparison() {
        let pruner = MedianPruner {
            warmup_steps: 0,
            startup_trials: 1,
        };
        let history = vec![completed(0, vec![1.0]), completed(1, vec![2.0]), completed(2, vec![3.0])];
        let high = trial(3, vec![5.0], None, TrialState::Running);
        let low = trial(4, vec![0.5], None, TrialState::Running);
        assert!(should_prune(&high, &history, &pruner, Direction::Minimize));
        assert!(!should_prune(&low, &history, &pruner, Direction::Minimize));
        assert!(!should_prune(&high, &history, &pruner, Direction::Maximize));
        assert!(should_prune(&low, &history, &pruner, Direction::Maximize));
    }

    #[test]
    fn even_count_median_averages_the_middle_pair() {
        let pruner = MedianPruner {
            warmup_steps: 0,
            startup_trials: 1,
        };
        let history = vec![
            completed(0, vec![0.2]),
            completed(1, vec![0.4]),
            completed(2, vec![0.6]),
            completed(3, vec![0.8]),
        ];
        // Median = 0.5; 0.49 prunes, 0.51 survives.
        let below = trial(4, vec![0.49], None, TrialState::Running);
        let above = trial(5, vec![0.51], None, TrialState::Running);
        assert!(should_prune(&below, &history, &pruner, Direction::Maximize));
        assert!(!should_prune(&above, &history, &pruner, Direction::Maximize));
    }

    fn categorical_ab_space() -> Vec<ParamSpec> {
        vec![ParamSpec::categorical_texts("choice", &["a", "b"]).unwrap()]
    }

    fn ab_objective(config: &TrialConfig) -> f64 {
        match config.get("choice") {
            Some(HyperValue::Text(t)) if t == "b" => 0.7,
            _ => 0.3,
        }
    }

    #[test]
    fn dominant_categorical_choice_wins() {
        let study = StudyConfig::new(10, Direction::Maximize, 5);
        let (best, records) = run_study(
            |config, _| Ok(Some(ab_objective(config))),
            &categorical_ab_space(),
            &study,
        )
        .unwrap();
        assert_eq!(best["choice"], HyperValue::Text("b".into()));
        assert_eq!(records.len(), 10);
        assert!(records.iter().all(|r| r.state == TrialState::Complete));
    }

    #[test]
    fn study_is_reproducible() {
        let study = StudyConfig::new(12, Direction::Maximize, 21);
        let space = vec![ParamSpec::log_uniform("x", 1e-4, 1e2).unwrap()];
        let objective = |config: &TrialConfig, reporter: &mut Reporter| {
            let HyperValue::Float(x) = config["x"] else {
                panic!()
            };
            let score = -(x.log10() - 1.0).abs();
            reporter.report(score);
            Ok(Some(score))
        };
        let (best1, log1) = run_study(objective, &space, &study).unwrap();
        let (best2, log2) = run_study(objective, &space, &study).unwrap();
        assert_eq!(best1, best2);
        assert_eq!(log1, log2);
    }

    #[test]
    fn pruned_trials_are_never_best_and_have_no_final_score() {
        // Scores decrease with trial order, so every post-startup trial is
        // below the running median and is pruned at its first step.
        let study = StudyConfig {
            n_trials: 12,
            direction: Direction::Maximize,
            pruner: MedianPruner {
                warmup_steps: 0,
                startup_trials: 5,
            },
            seed: 2,
        };
        let mut next = 100.0;
        let objective = move |_: &TrialConfig, reporter: &mut Reporter| {
            next -= 1.0;
            if reporter.report(next) {
                return Ok(None);
            }
            Ok(Some(next))
        };
        let (best, records) = run_study(objective, &categorical_ab_space(), &study).unwrap();
        let best_record = records
            .iter()
            .filter(|r| r.state == TrialState::Complete)
            .max_by(|a, b| a.final_score.unwrap().total_cmp(&b.final_score.unwrap()))
            .unwrap();
        assert_eq!(best, best_record.config);
        assert_eq!(best_record.trial_id, 0, "first (highest) trial must win");
        let pruned: Vec<_> = records
            .iter()
            .filter(|r| r.state == TrialState::Pruned)
            .collect();
        assert!(!pruned.is_empty(), "expected post-startup trials to be pruned");
        for r in &records {
            match r.state {
                TrialState::Complete => {
                    assert!(r.final_score.is_some());
                    assert!(r.trial_id < 5 || r.final_score.unwrap() >= best_record.final_score.unwrap());
                }
                _ => assert!(r.final_score.is_none()),
            }
        }
        // Everything pruned came after the startup-complete phase.
        assert!(pruned.iter().all(|r| r.trial_id >= 5));
    }

    #[test]
    fn all_pruned_study_is_an_error() {
        let study = StudyConfig::new(4, Direction::Maximize, 0);
        let err = run_study(
            |_, _| Ok(None),
            &categorical_ab_space(),
            &study,
        )
        .unwrap_err();
        assert!(matches!(err, Error::AllTrialsPruned));
    }

    #[test]
    fn failed_trials_are_recorded_and_skipped() {
        let study = StudyConfig::new(6, Direction::Maximize, 3);
        let mut count = 0;
        let objective = move |config: &TrialConfig, _: &mut Reporter| {
            count += 1;
            if count % 2 == 0 {
                return Err(Error::Schema("simulated failure".into()));
            }
            Ok(Some(ab_objective(config)))
        };
        let (_, records) = run_study(objective, &categorical_ab_space(), &study).unwrap();
        let failed = records.iter().filter(|r| r.state == TrialState::Failed).count();
        assert_eq!(failed, 3);
        assert!(records
            .iter()
            .filter(|r| r.state == TrialState::Failed)
            .all(|r| r.final_score.is_none()));
    }

    #[test]
    fn non_finite_scores_mark_the_trial_failed() {
        let study = StudyConfig::new(2, Direction::Maximize, 0);
        let mut first = true;
        let objective = move |_: &TrialConfig, _: &mut Reporter| {
            if first {
                first = false;
                Ok(Some(f64::NAN))
            } else {
                Ok(Some(0.5))
            }
        };
        let (_, records) = run_study(objective, &categorical_ab_space(), &study).unwrap();
        assert_eq!(records[0].state, TrialState::Failed);
        assert_eq!(records[1].state, TrialState::Complete);
    }

    #[test]
    fn zero_trials_is_a_range_error() {
        let study = StudyConfig::new(0, Direction::Maximize, 0);
        assert!(matches!(
            run_study(|_, _| Ok(Some(0.0)), &categorical_ab_space(), &study),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn log_uniform_benchmark_lands_within_one_decade() {
        // Smaller sibling of the acceptance benchmark: 20 studies of 30
        // trials each against a known optimum at 1e-3 in a ten-decade
        // space; nearly all must land within one decade.
        let space = vec![ParamSpec::log_uniform("x", 1e-8, 1e2).unwrap()];
        let mut hits = 0;
        for seed in 0..20 {
            let study = StudyConfig::new(30, Direction::Maximize, 1000 + seed);
            let objective = |config: &TrialConfig, reporter: &mut Reporter| {
                let HyperValue::Float(x) = config["x"] else {
                    panic!()
                };
                let score = -(x.log10() + 3.0).abs();
                if reporter.report(score) {
                    return Ok(None);
                }
                Ok(Some(score))
            };
            let (best, records) = run_study(objective, &space, &study).unwrap();
            // Structural invariant: the selected config belongs to a
            // complete (never pruned) trial.
            assert!(records
                .iter()
                .any(|r| r.state == TrialState::Complete && r.config == best));
            let HyperValue::Float(x) = best["x"] else {
                panic!()
            };
            if (x.log10() + 3.0).abs() <= 1.0 {
                hits += 1;
            }
        }
        assert!(hits >= 18, "only {hits}/20 studies landed within a decade");
    }

    fn leaky_dataset(n_per_class: usize) -> (Dataset, FeatureMatrix<f64>) {
        let classes = ["a", "b", "c"];
        let taxonomy = CauseTaxonomy::new(
            classes.iter().map(|s| s.to_string()).collect(),
            Vec::new(),
            Vec::new(),
            Vec::new(),
        )
        .unwrap();
        let mut records = Vec::new();
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        for (ci, class) in classes.iter().enumerate() {
            for j in 0..n_per_class {
                let id = format!("{class}{j}");
                let mut rec = VARecord::new(&id);
                rec.cause_level1 = Some(class.to_string());
                records.push(rec);
                // The label index is the sole feature: a perfect signal.
                rows.push(vec![ci as f64]);
                ids.push(id);
            }
        }
        let ds = Dataset::new(records, taxonomy, Level::L1).unwrap();
        let x = FeatureMatrix::new(
            ids,
            vec!["leak".to_string()],
            DenseMatrix::from_rows(&rows).unwrap(),
        )
        .unwrap();
        (ds, x)
    }

    #[test]
    fn leaked_label_feature_reaches_objective_one() {
        let (ds, x) = leaky_dataset(6);
        let template = LearnerSpec::new(LearnerKind::Knn, 0).with_int("k", 1);
        let mut objective = cv_objective(&template, &ds, &x, 3).unwrap();
        let mut reporter = Reporter::new(&[], MedianPruner::disabled(), Direction::Maximize);
        let score = objective(&TrialConfig::new(), &mut reporter).unwrap().unwrap();
        assert_eq!(score, 1.0);
        assert_eq!(reporter.interim_scores().len(), 3, "one report per fold");
        assert!(reporter.interim_scores().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn label_randomized_data_scores_near_chance() {
        let classes = ["a", "b", "c"];
        let taxonomy = CauseTaxonomy::new(
            classes.iter().map(|s| s.to_string()).collect(),
            Vec::new(),
            Vec::new(),
            Vec::new(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 120;
        let mut records = Vec::new();
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        for i in 0..n {
            let id = format!("r{i}");
            let mut rec = VARecord::new(&id);
            rec.cause_level1 = Some(classes[i % 3].to_string());
            records.push(rec);
            rows.push(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            ids.push(id);
        }
        let ds = Dataset::new(records, taxonomy, Level::L1).unwrap();
        let x = FeatureMatrix::new(
            ids,
            vec!["f0".to_string(), "f1".to_string()],
            DenseMatrix::from_rows(&rows).unwrap(),
        )
        .unwrap();
        let template = LearnerSpec::new(LearnerKind::Knn, 0).with_int("k", 5);
        let mut objective = cv_objective(&template, &ds, &x, 4).unwrap();
        let mut reporter = Reporter::new(&[], MedianPruner::disabled(), Direction::Maximize);
        let score = objective(&TrialConfig::new(), &mut reporter).unwrap().unwrap();
        // Weighted F1 under random features concentrates near chance 1/3;
        // allow a generous band (3σ of per-record accuracy at n=120).
        let band = 3.0 * ((1.0 / 3.0_f64) * (2.0 / 3.0) / n as f64).sqrt();
        assert!(
            (score - 1.0 / 3.0).abs() < band + 0.05,
            "objective {score} is far from chance 1/3 (band {band})"
        );
    }

    #[test]
    fn cv_objective_is_deterministic() {
        let (ds, x) = leaky_dataset(4);
        let template = LearnerSpec::new(LearnerKind::Logreg, 7).with_int("epochs", 20);
        let mut objective = cv_objective(&template, &ds, &x, 2).unwrap();
        let config: TrialConfig =
            [("lr".to_string(), HyperValue::Float(0.3))].into_iter().collect();
        let s1 = {
            let mut rep = Reporter::new(&[], MedianPruner::disabled(), Direction::Maximize);
            objective(&config, &mut rep).unwrap().unwrap()
        };
        let s2 = {
            let mut rep = Reporter::new(&[], MedianPruner::disabled(), Direction::Maximize);
            objective(&config, &mut rep).unwrap().unwrap()
        };
        assert_eq!(s1, s2);
    }

    #[test]
    fn cv_objective_with_bad_fold_count_fails_eagerly() {
        let (ds, x) = leaky_dataset(4);
        let template = LearnerSpec::new(LearnerKind::Knn, 0);
        assert!(matches!(
            cv_objective(&template, &ds, &x, 1).map(|_| ()),
            Err(Error::Fold(_))
        ));
    }

    #[test]
    fn cv_objective_rejects_foreign_hyperparameters() {
        let (ds, x) = leaky_dataset(4);
        let template = LearnerSpec::new(LearnerKind::Knn, 0);
        let mut objective = cv_objective(&template, &ds, &x, 2).unwrap();
        let config: TrialConfig =
            [("epochs".to_string(), HyperValue::Int(5))].into_iter().collect();
        let mut rep = Reporter::new(&[], MedianPruner::disabled(), Direction::Maximize);
        assert!(matches!(
            objective(&config, &mut rep),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn study_log_round_trips_through_jsonl() {
        let records = vec![
            completed(0, vec![0.1, 0.2]),
            trial(1, vec![0.05], None, TrialState::Pruned),
            trial(2, vec![], None, TrialState::Failed),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.jsonl");
        write_study_log(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3, "one JSON object per line");
        let back = read_study_log(&path).unwrap();
        assert_eq!(back, records);
        std::fs::write(&path, "{broken json\n").unwrap();
        assert!(matches!(
            read_study_log(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
