//! Numeric feature construction for both modalities.
//!
//! [`FeatureMatrix`] is the common currency: an N×D dense matrix whose rows
//! are records (by id) and whose columns carry stable, namespaced names.
//! Two encoders produce them:
//!
//! - [`TabularEncoder`] turns closed question responses into numbers — one
//!   value column (`q:<indicator>`) and one missingness flag column
//!   (`q:<indicator>:missing`) per indicator.
//! - [`NarrativeFeaturizer`] runs narratives through preprocessing, TF–IDF,
//!   and optionally a truncated SVD projection, yielding `tfidf:<gram>` or
//!   `svd:<index>` columns.
//!
//! Fitted encoders are immutable and apply the same mapping to any record
//! set, so training and evaluation features always share a column space.

use crate::data::{Response, VARecord};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use crate::text::svd::SvdModel;
use crate::text::tfidf::TfidfModel;
use crate::text::{fit_tfidf, is_invalid_narrative, preprocess, PreprocessConfig};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// An N×D dense feature matrix with row ids and named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix<F> {
    ids: Vec<String>,
    columns: Vec<String>,
    values: DenseMatrix<F>,
}

impl<F: Scalar> FeatureMatrix<F> {
    /// Builds a matrix, validating that ids are unique and shapes agree.
    pub fn new(ids: Vec<String>, columns: Vec<String>, values: DenseMatrix<F>) -> Result<Self> {
        if values.rows() != ids.len() {
            return Err(Error::dim("feature rows", ids.len(), values.rows()));
        }
        if values.cols() != columns.len() {
            return Err(Error::dim("feature columns", columns.len(), values.cols()));
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(FeatureMatrix {
            ids,
            columns,
            values,
        })
    }

    /// Record ids, one per row.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Column names, one per column.
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// The underlying matrix.
    pub fn values(&self) -> &DenseMatrix<F> {
        &self.values
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    /// Number of columns.
    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// The row for a given id, if present.
    pub fn row_of(&self, id: &str) -> Option<&[F]> {
        let pos = self.ids.iter().position(|i| i == id)?;
        Some(self.values.row(pos))
    }

    /// Extracts the rows for the given ids, in the requested order.
    pub fn select_ids(&self, ids: &[String]) -> Result<FeatureMatrix<F>> {
        let index: BTreeMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut positions = Vec::with_capacity(ids.len());
        for id in ids {
            let pos = index
                .get(id.as_str())
                .ok_or_else(|| Error::Alignment(format!("id {id:?} not in feature matrix")))?;
            positions.push(*pos);
        }
        FeatureMatrix::new(
            ids.to_vec(),
            self.columns.clone(),
            self.values.select_rows(&positions),
        )
    }
}

/// Numeric value and missingness flag for one response.
///
/// Yes → 1, No → 0, Don't-know and Missing → 0.5; the flag is 1 only for
/// Missing (absent responses count as Missing).
pub fn encode_response<F: Scalar>(response: Response) -> (F, F) {
    match response {
        Response::Yes => (F::one(), F::zero()),
        Response::No => (F::zero(), F::zero()),
        Response::DontKnow => (F::c(0.5), F::zero()),
        Response::Missing => (F::c(0.5), F::one()),
    }
}

/// Encodes question responses into a fixed-width numeric matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabularEncoder {
    indicators: Vec<String>,
}

impl TabularEncoder {
    /// Fits the encoder on training records: the indicator set is the sorted
    /// union of all question keys seen.
    pub fn fit(records: &[VARecord]) -> Self {
        let set: BTreeSet<String> = records
            .iter()
            .flat_map(|r| r.questions.keys().cloned())
            .collect();
        TabularEncoder {
            indicators: set.into_iter().collect(),
        }
    }

    /// Builds an encoder over an explicit indicator list (sorted, deduplicated).
    pub fn from_indicators(indicators: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = indicators.into_iter().collect();
        TabularEncoder {
            indicators: set.into_iter().collect(),
        }
    }

    /// The fitted indicator list, sorted.
    pub fn indicators(&self) -> &[String] {
        &self.indicators
    }

    /// Column names: a value and a missingness flag per indicator.
    pub fn column_names(&self) -> Vec<String> {
        let mut cols = Vec::with_capacity(self.indicators.len() * 2);
        for ind in &self.indicators {
            cols.push(format!("q:{ind}"));
            cols.push(format!("q:{ind}:missing"));
        }
        cols
    }

    /// Encodes records into features; a question absent from a record's map
    /// is treated as Missing. Row order matches record order.
    pub fn encode<F: Scalar>(&self, records: &[VARecord]) -> Result<FeatureMatrix<F>> {
        let mut values = DenseMatrix::zeros(records.len(), self.indicators.len() * 2);
        for (r, rec) in records.iter().enumerate() {
            let row = values.row_mut(r);
            for (i, ind) in self.indicators.iter().enumerate() {
                let response = rec
                    .questions
                    .get(ind)
                    .copied()
                    .unwrap_or(Response::Missing);
                let (value, flag) = encode_response::<F>(response);
                row[2 * i] = value;
                row[2 * i + 1] = flag;
            }
        }
        let ids = records.iter().map(|r| r.id.clone()).collect();
        FeatureMatrix::new(ids, self.column_names(), values)
    }
}

/// Configuration for fitting a [`NarrativeFeaturizer`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NarrativeFeaturizerConfig {
    pub preprocess: PreprocessConfig,
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    pub max_features: Option<usize>,
    /// Requested SVD dimensionality; None keeps raw TF–IDF columns. The
    /// fitted rank is clamped to min(k, rows, vocabulary) so the default
    /// works on small corpora.
    pub svd_k: Option<usize>,
}

impl Default for NarrativeFeaturizerConfig {
    fn default() -> Self {
        NarrativeFeaturizerConfig {
            preprocess: PreprocessConfig::default(),
            ngram_range: (1, 2),
            min_df: 2,
            max_features: None,
            svd_k: Some(450),
        }
    }
}

/// A fitted narrative-to-features pipeline: preprocessing, TF–IDF, and an
/// optional truncated SVD projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeFeaturizer<F> {
    preprocess: PreprocessConfig,
    tfidf: TfidfModel,
    svd: Option<SvdModel<F>>,
}

impl<F: Scalar> NarrativeFeaturizer<F> {
    /// Fits the pipeline on training records. Invalid narratives contribute
    /// empty token lists (and later become all-zero rows).
    pub fn fit(records: &[VARecord], config: &NarrativeFeaturizerConfig, seed: u64) -> Result<Self> {
        config.preprocess.validate()?;
        let corpus = Self::tokenize(records, &config.preprocess);
        let tfidf = fit_tfidf(
            &corpus,
            config.ngram_range,
            config.min_df,
            config.max_features,
        )?;
        let svd = match config.svd_k {
            None => None,
            Some(k) => {
                let k_eff = k.min(records.len()).min(tfidf.vocab_size());
                let x: DenseMatrix<F> = tfidf.transform(&corpus);
                Some(crate::text::fit_svd(&x, k_eff, seed)?)
            }
        };
        Ok(NarrativeFeaturizer {
            preprocess: config.preprocess.clone(),
            tfidf,
            svd,
        })
    }

    fn tokenize(records: &[VARecord], cfg: &PreprocessConfig) -> Vec<Vec<String>> {
        records
            .iter()
            .map(|r| {
                if is_invalid_narrative(&r.narrative) {
                    Vec::new()
                } else {
                    preprocess(&r.narrative, cfg)
                }
            })
            .collect()
    }

    /// The fitted TF–IDF model.
    pub fn tfidf(&self) -> &TfidfModel {
        &self.tfidf
    }

    /// The fitted SVD model, when projection is enabled.
    pub fn svd(&self) -> Option<&SvdModel<F>> {
        self.svd.as_ref()
    }

    /// Output column names: `svd:<index>` when projecting, otherwise
    /// `tfidf:<gram>` in vocabulary order.
    pub fn column_names(&self) -> Vec<String> {
        match &self.svd {
            Some(model) => (0..model.k()).map(|i| format!("svd:{i:03}")).collect(),
            None => self
                .tfidf
                .feature_names()
                .into_iter()
                .map(|g| format!("tfidf:{g}"))
                .collect(),
        }
    }

    /// Transforms records into features. Row order matches record order;
    /// invalid narratives yield all-zero rows.
    pub fn transform(&self, records: &[VARecord]) -> Result<FeatureMatrix<F>> {
        let corpus = Self::tokenize(records, &self.preprocess);
        let x: DenseMatrix<F> = self.tfidf.transform(&corpus);
        let values = match &self.svd {
            Some(model) => crate::text::transform_svd(model, &x)?,
            None => x,
        };
        let ids = records.iter().map(|r| r.id.clone()).collect();
        FeatureMatrix::new(ids, self.column_names(), values)
    }
}
