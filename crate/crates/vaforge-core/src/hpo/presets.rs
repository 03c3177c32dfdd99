//! Bundled hyperparameter search spaces.
//!
//! Two families ship as defaults: a transformer-style fine-tuning space
//! (learning rate, batch size, epochs, weight decay, warmup ratio,
//! gradient accumulation, layer freezing) for external model adapters and
//! future deep backends, and per-learner spaces for the native models.
//! Both are plain data; callers can always define their own spaces in
//! configuration instead.

use super::tpe::ParamSpec;
use crate::error::{Error, Result};
use crate::learners::LearnerKind;

/// The transformer fine-tuning search space.
///
/// The warmup ratio starts at 0.0, where a log-uniform draw is undefined,
/// so that dimension is sampled uniformly.
pub fn plm_search_space() -> Vec<ParamSpec> {
    vec![
        ParamSpec::log_uniform("learning_rate", 5e-6, 4e-5).expect("static bounds"),
        ParamSpec::categorical_ints("batch_size", &[8, 16, 32]).expect("static values"),
        ParamSpec::categorical_ints("epochs", &[3, 5, 7]).expect("static values"),
        ParamSpec::log_uniform("weight_decay", 1e-6, 0.1).expect("static bounds"),
        ParamSpec::uniform("warmup_ratio", 0.0, 0.2).expect("static bounds"),
        ParamSpec::categorical_ints("gradient_accumulation_steps", &[1, 2]).expect("static values"),
        ParamSpec::categorical_ints("freeze_layers", &[0, 4, 8, 12]).expect("static values"),
    ]
}

/// The default search space for a native learner kind.
///
/// Every dimension name is a declared hyperparameter of the kind, so
/// sampled configs validate against [`crate::learners::LearnerSpec`].
/// External adapters carry fixed predictions and have nothing to tune.
pub fn ml_search_space(kind: LearnerKind) -> Result<Vec<ParamSpec>> {
    let space = match kind {
        LearnerKind::Gbdt => vec![
            ParamSpec::log_uniform("learning_rate", 0.01, 0.2).expect("static bounds"),
            ParamSpec::categorical_ints("n_estimators", &[50, 100, 150, 200])
                .expect("static values"),
            ParamSpec::categorical_ints("max_depth", &[1, 3, 5, 7]).expect("static values"),
            ParamSpec::categorical_ints("min_samples_leaf", &[1, 2, 4]).expect("static values"),
        ],
        LearnerKind::Mlp => vec![
            ParamSpec::categorical_ints("hidden", &[50, 100]).expect("static values"),
            ParamSpec::categorical_texts("activation", &["tanh", "relu"]).expect("static values"),
            ParamSpec::categorical_floats("l2", &[0.0001, 0.001, 0.01]).expect("static values"),
            ParamSpec::log_uniform("lr", 0.01, 1.0).expect("static bounds"),
            ParamSpec::categorical_ints("epochs", &[100, 200, 400]).expect("static values"),
        ],
        LearnerKind::Logreg => vec![
            ParamSpec::log_uniform("lr", 0.01, 1.0).expect("static bounds"),
            ParamSpec::categorical_ints("epochs", &[100, 200, 400]).expect("static values"),
            ParamSpec::log_uniform("l2", 1e-6, 0.1).expect("static bounds"),
        ],
        LearnerKind::Knn => vec![ParamSpec::integer("k", 1, 50).expect("static bounds")],
        LearnerKind::External => {
            return Err(Error::Schema(
                "external prediction adapters have no tunable hyperparameters".into(),
            ))
        }
    };
    Ok(space)
}
