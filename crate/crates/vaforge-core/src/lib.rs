//! Multimodal verbal-autopsy cause-of-death classification.
//!
//! This crate implements the full desk-scale pipeline: loading interview
//! datasets (closed questions plus free-text narratives), featurizing each
//! modality, training probabilistic classifiers, fusing modalities at the
//! data, feature, or decision level, tuning hyperparameters, and scoring
//! predictions with classification and cause-specific mortality metrics.
//!
//! All numeric code is generic over a floating-point [`Scalar`]; `f64`
//! aliases for the common container types are exported at the crate root.

pub mod artifact;
pub mod data;
pub mod error;
pub mod features;
pub mod fusion;
pub mod hpo;
pub mod learners;
pub mod linalg;
pub mod metrics;
pub mod prob;
pub mod scalar;
pub mod sufficiency;
pub mod template;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense `f64` matrix, the default numeric workhorse.
pub type DenseMatrixF64 = linalg::DenseMatrix<f64>;

/// `f64` feature matrix with named columns.
pub type FeatureMatrixF64 = features::FeatureMatrix<f64>;

/// `f64` row-stochastic class-probability matrix.
pub type ProbMatrixF64 = prob::ProbMatrix<f64>;

/// `f64` fitted classifier.
pub type FittedModelF64 = learners::FittedModel<f64>;

/// `f64` out-of-fold prediction bundle.
pub type OofPredictionF64 = fusion::OofPrediction<f64>;

/// `f64` stacking ensemble.
pub type StackedModelF64 = fusion::StackedModel<f64>;
