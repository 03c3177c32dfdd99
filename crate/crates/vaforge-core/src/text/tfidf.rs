//! N-gram TF-IDF vectorization.
//!
//! The variant is pinned for reproducibility: raw term counts, smoothed
//! inverse document frequency `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, and
//! L2 normalization of each document vector. Vocabulary columns are assigned
//! in lexicographic n-gram order, so a fitted model is a pure function of
//! the corpus and settings.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A fitted TF-IDF vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfModel {
    vocabulary: BTreeMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    ngram_range: (usize, usize),
    min_df: usize,
    max_features: Option<usize>,
}

/// All n-grams of a token list for the inclusive range `(lo, hi)`, joined by
/// single spaces, in document order.
fn ngrams(tokens: &[String], range: (usize, usize)) -> Vec<String> {
    let (lo, hi) = range;
    let mut out = Vec::new();
    for n in lo..=hi {
        if n == 0 || n > tokens.len() {
            continue;
        }
        for window in tokens.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Fits a TF-IDF vocabulary on a tokenized corpus.
///
/// Terms must appear in at least `min_df` documents; if `max_features` is
/// set, the vocabulary is truncated to the terms with the highest document
/// frequency, breaking ties toward the lexicographically smaller n-gram.
pub fn fit_tfidf(
    corpus: &[Vec<String>],
    ngram_range: (usize, usize),
    min_df: usize,
    max_features: Option<usize>,
) -> Result<TfidfModel> {
    let (lo, hi) = ngram_range;
    if lo == 0 || lo > hi {
        return Err(Error::Range {
            name: "ngram_range".into(),
            value: lo as f64,
            expected: format!("1 <= lo <= hi (got lo = {lo}, hi = {hi})"),
        });
    }
    let mut doc_counts: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: BTreeSet<String> = ngrams(doc, ngram_range).into_iter().collect();
        for gram in unique {
            *doc_counts.entry(gram).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = doc_counts
        .into_iter()
        .filter(|(_, df)| *df >= min_df.max(1))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_df: min_df.max(1),
        });
    }
    if let Some(limit) = max_features {
        // Highest document frequency first; ties keep the lexicographically
        // smaller n-gram (`kept` is already in lexicographic order, and the
        // sort is stable).
        kept.sort_by(|a, b| b.1.cmp(&a.1));
        kept.truncate(limit.max(1));
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let mut vocabulary = BTreeMap::new();
    let mut doc_freq = Vec::with_capacity(kept.len());
    for (i, (gram, df)) in kept.into_iter().enumerate() {
        vocabulary.insert(gram, i);
        doc_freq.push(df);
    }
    Ok(TfidfModel {
        vocabulary,
        doc_freq,
        n_docs: corpus.len(),
        ngram_range,
        min_df: min_df.max(1),
        max_features,
    })
}

impl TfidfModel {
    /// Vocabulary size.
    pub fn vocab_size(&self) -> usize {
        self.doc_freq.len()
    }

    /// Number of documents the model was fitted on.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// The fitted n-gram range.
    pub fn ngram_range(&self) -> (usize, usize) {
        self.ngram_range
    }

    /// Column index of an n-gram, if in the vocabulary.
    pub fn column_of(&self, gram: &str) -> Option<usize> {
        self.vocabulary.get(gram).copied()
    }

    /// Document frequency by column index.
    pub fn doc_freq(&self, column: usize) -> usize {
        self.doc_freq[column]
    }

    /// Smoothed inverse document frequency for a column.
    pub fn idf(&self, column: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[column] as f64)).ln() + 1.0
    }

    /// Vocabulary terms in column order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.vocab_size()];
        for (gram, &i) in &self.vocabulary {
            names[i] = gram.clone();
        }
        names
    }

    /// Transforms one tokenized document into a dense L2-normalized row.
    ///
    /// Out-of-vocabulary n-grams are ignored; a document with no vocabulary
    /// terms yields the zero vector.
    pub fn transform_doc<F: Scalar>(&self, doc: &[String]) -> Vec<F> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for gram in ngrams(doc, self.ngram_range) {
            if let Some(&col) = self.vocabulary.get(&gram) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let mut row = vec![F::zero(); self.vocab_size()];
        let mut norm_sq = F::zero();
        for (col, count) in counts {
            let value = F::c(count as f64) * F::c(self.idf(col));
            norm_sq += value * value;
            row[col] = value;
        }
        if norm_sq > F::zero() {
            let norm = norm_sq.sqrt();
            for v in &mut row {
                *v /= norm;
            }
        }
        row
    }

    /// Transforms a tokenized corpus into an `N x V` matrix.
    pub fn transform<F: Scalar>(&self, corpus: &[Vec<String>]) -> DenseMatrix<F> {
        let mut out = DenseMatrix::zeros(corpus.len(), self.vocab_size());
        for (i, doc) in corpus.iter().enumerate() {
            let row = self.transform_doc::<F>(doc);
            out.row_mut(i).copy_from_slice(&row);
        }
        out
    }
}
