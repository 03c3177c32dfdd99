//! Predicted probability matrices.
//!
//! [`ProbMatrix`] holds per-record class probabilities: one row per record
//! id, one column per class, every row on the probability simplex. It is the
//! interchange format between learners, ensembles, and metrics, and round
//! trips through a CSV with an `id,<class...>` header so externally produced
//! probabilities can join an ensemble.
//!
//! Argmax ties are always broken toward the lowest class index; the same
//! rule applies everywhere a predicted class is extracted.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// How far a row sum may drift from one in a validated matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// An N×C row-stochastic matrix of class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbMatrix<F> {
    ids: Vec<String>,
    classes: Vec<String>,
    values: DenseMatrix<F>,
}

impl<F: Scalar> ProbMatrix<F> {
    /// Builds a matrix, validating shapes, unique ids, nonnegative entries,
    /// and row sums within [`ROW_SUM_TOLERANCE`] of one.
    pub fn new(ids: Vec<String>, classes: Vec<String>, values: DenseMatrix<F>) -> Result<Self> {
        Self::with_tolerance(ids, classes, values, ROW_SUM_TOLERANCE, false)
    }

    /// Like [`ProbMatrix::new`], but rows whose sums are within `tolerance`
    /// of one are rescaled to sum exactly to one. Rows further off still
    /// error.
    pub fn new_renormalized(
        ids: Vec<String>,
        classes: Vec<String>,
        values: DenseMatrix<F>,
        tolerance: f64,
    ) -> Result<Self> {
        Self::with_tolerance(ids, classes, values, tolerance, true)
    }

    fn with_tolerance(
        ids: Vec<String>,
        classes: Vec<String>,
        mut values: DenseMatrix<F>,
        tolerance: f64,
        renormalize: bool,
    ) -> Result<Self> {
        if values.rows() != ids.len() {
            return Err(Error::dim("probability rows", ids.len(), values.rows()));
        }
        if values.cols() != classes.len() {
            return Err(Error::dim(
                "probability columns",
                classes.len(),
                values.cols(),
            ));
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (r, id) in ids.iter().enumerate() {
            let row = values.row_mut(r);
            let mut sum = F::zero();
            for &v in row.iter() {
                if !v.is_finite() || v < F::zero() {
                    return Err(Error::NonFinite(format!(
                        "probability {v} for {id:?} is negative or non-finite"
                    )));
                }
                sum += v;
            }
            // The tiny slack keeps boundary sums that are representable only
            // approximately (0.999 against tolerance 1e-3) on the repairable
            // side instead of erroring on roundoff.
            let drift = (sum.to_f64_lossy() - 1.0).abs();
            if drift > tolerance + 1e-12 {
                return Err(Error::Stochasticity {
                    id: id.clone(),
                    sum: sum.to_f64_lossy(),
                    tolerance,
                });
            }
            if renormalize && sum > F::zero() {
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        Ok(ProbMatrix {
            ids,
            classes,
            values,
        })
    }

    /// Record ids, one per row.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Class labels, one per column.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// The underlying matrix.
    pub fn values(&self) -> &DenseMatrix<F> {
        &self.values
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    /// Number of classes.
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// The probability row for a given id, if present.
    pub fn row_of(&self, id: &str) -> Option<&[F]> {
        let pos = self.ids.iter().position(|i| i == id)?;
        Some(self.values.row(pos))
    }

    /// Predicted class index for a row (lowest index on ties).
    pub fn predicted_index(&self, row: usize) -> usize {
        argmax(self.values.row(row))
    }

    /// Predicted class label for a row.
    pub fn predicted_class(&self, row: usize) -> &str {
        &self.classes[self.predicted_index(row)]
    }

    /// Predicted class labels for every row, in row order.
    pub fn predicted_classes(&self) -> Vec<&str> {
        (0..self.n_rows()).map(|r| self.predicted_class(r)).collect()
    }

    /// Mean probability per class across all rows, in class order.
    pub fn mean_probabilities(&self) -> Vec<F> {
        self.values.col_means()
    }

    /// Reorders columns to match `classes`, which must contain exactly the
    /// same labels.
    pub fn reorder_classes(&self, classes: &[String]) -> Result<ProbMatrix<F>> {
        let ours: BTreeSet<&str> = self.classes.iter().map(|c| c.as_str()).collect();
        let theirs: BTreeSet<&str> = classes.iter().map(|c| c.as_str()).collect();
        if ours != theirs || classes.len() != self.classes.len() {
            return Err(Error::Schema(format!(
                "class mismatch: have {:?}, requested {:?}",
                self.classes, classes
            )));
        }
        let position: BTreeMap<&str, usize> = self
            .classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut values = DenseMatrix::zeros(self.n_rows(), classes.len());
        for r in 0..self.n_rows() {
            let src = self.values.row(r);
            let dst = values.row_mut(r);
            for (j, class) in classes.iter().enumerate() {
                dst[j] = src[position[class.as_str()]];
            }
        }
        ProbMatrix::new(self.ids.clone(), classes.to_vec(), values)
    }

    /// Extracts the rows for the given ids, in the requested order.
    pub fn select_ids(&self, ids: &[String]) -> Result<ProbMatrix<F>> {
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
                .ok_or_else(|| Error::Alignment(format!("id {id:?} not in probability matrix")))?;
            positions.push(*pos);
        }
        Ok(ProbMatrix {
            ids: ids.to_vec(),
            classes: self.classes.clone(),
            values: self.values.select_rows(&positions),
        })
    }

    /// Writes the matrix as CSV with header `id,<class...>`.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["id".to_string()];
        header.extend(self.classes.iter().cloned());
        writer.write_record(&header)?;
        for (r, id) in self.ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.values.row(r).iter().map(|v| format!("{v}")));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`ProbMatrix::to_csv`] (or any file with the
    /// same header shape). Rows whose sums are within `tolerance` of one are
    /// renormalized; rows further off raise a stochasticity error.
    pub fn from_csv(path: &Path, tolerance: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if headers.first().map(String::as_str) != Some("id") {
            return Err(Error::Schema(
                "probability csv must start with an \"id\" column".into(),
            ));
        }
        let classes: Vec<String> = headers[1..].to_vec();
        if classes.is_empty() {
            return Err(Error::Schema(
                "probability csv has no class columns".into(),
            ));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let line_no = i + 2;
            let row = row.map_err(|e| Error::parse(line_no, e.to_string()))?;
            if row.len() != headers.len() {
                return Err(Error::parse(
                    line_no,
                    format!("expected {} fields, found {}", headers.len(), row.len()),
                ));
            }
            ids.push(row[0].trim().to_string());
            let mut values = Vec::with_capacity(classes.len());
            for (c, cell) in row.iter().skip(1).enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::parse(
                        line_no,
                        format!("column {:?}: {:?} is not a number", classes[c], cell),
                    )
                })?;
                values.push(F::c(v));
            }
            rows.push(values);
        }
        let values = DenseMatrix::from_rows(&rows)?;
        ProbMatrix::new_renormalized(ids, classes, values, tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simple() -> ProbMatrix<f64> {
        ProbMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["c1".into(), "c2".into(), "c3".into()],
            DenseMatrix::from_rows(&[vec![0.5, 0.25, 0.25], vec![0.0, 0.0, 1.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn argmax_breaks_ties_toward_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.3, 0.35, 0.35]), 1);
        assert_eq!(argmax(&[1.0]), 0);
    }

    #[test]
    fn validation_rejects_bad_rows() {
        let ids = vec!["a".to_string()];
        let classes = vec!["c1".to_string(), "c2".to_string()];
        let too_low = DenseMatrix::from_rows(&[vec![0.4, 0.4]]).unwrap();
        assert!(matches!(
            ProbMatrix::new(ids.clone(), classes.clone(), too_low),
            Err(Error::Stochasticity { .. })
        ));
        let negative = DenseMatrix::from_rows(&[vec![1.5, -0.5]]).unwrap();
        assert!(matches!(
            ProbMatrix::new(ids.clone(), classes.clone(), negative),
            Err(Error::NonFinite(_))
        ));
        let dup = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            ProbMatrix::new(vec!["a".into(), "a".into()], classes, dup),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn renormalization_repairs_small_drift_only() {
        let ids = vec!["a".to_string()];
        let classes = vec!["c1".to_string(), "c2".to_string()];
        let drifted = DenseMatrix::from_rows(&[vec![0.4995, 0.4995]]).unwrap();
        let m = ProbMatrix::new_renormalized(ids.clone(), classes.clone(), drifted, 1e-3).unwrap();
        let sum: f64 = m.values().row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((m.values().get(0, 0) - 0.5).abs() < 1e-12);

        let way_off = DenseMatrix::from_rows(&[vec![0.45, 0.45]]).unwrap();
        let err = ProbMatrix::new_renormalized(ids, classes, way_off, 1e-3).unwrap_err();
        match err {
            Error::Stochasticity { id, sum, tolerance } => {
                assert_eq!(id, "a");
                assert!((sum - 0.9).abs() < 1e-12);
                assert_eq!(tolerance, 1e-3);
            }
            other => panic!("expected stochasticity error, got {other}"),
        }
    }

    #[test]
    fn predicted_classes_use_argmax() {
        let m = simple();
        assert_eq!(m.predicted_class(0), "c1");
        assert_eq!(m.predicted_class(1), "c3");
        assert_eq!(m.predicted_classes(), vec!["c1", "c3"]);
    }

    #[test]
    fn reorder_classes_permutes_columns() {
        let m = simple();
        let order = vec!["c3".to_string(), "c1".to_string(), "c2".to_string()];
        let r = m.reorder_classes(&order).unwrap();
        assert_eq!(r.classes(), &["c3", "c1", "c2"]);
        assert_eq!(r.values().row(0), &[0.25, 0.5, 0.25]);
        assert_eq!(r.row_of("b").unwrap(), &[1.0, 0.0, 0.0]);

        let bad = vec!["c1".to_string(), "c2".to_string(), "zzz".to_string()];
        assert!(matches!(m.reorder_classes(&bad), Err(Error::Schema(_))));
    }

    #[test]
    fn select_ids_preserves_rows() {
        let m = simple();
        let s = m.select_ids(&["b".into()]).unwrap();
        assert_eq!(s.ids(), &["b"]);
        assert_eq!(s.values().row(0), &[0.0, 0.0, 1.0]);
        assert!(matches!(
            m.select_ids(&["ghost".into()]),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probs.csv");
        let m = simple();
        m.to_csv(&path).unwrap();
        let back: ProbMatrix<f64> = ProbMatrix::from_csv(&path, ROW_SUM_TOLERANCE).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probs.csv");
        std::fs::write(&path, "record,c1\nr1,1.0\n").unwrap();
        assert!(matches!(
            ProbMatrix::<f64>::from_csv(&path, 1e-3),
            Err(Error::Schema(_))
        ));
        std::fs::write(&path, "id,c1,c2\nr1,0.5,oops\n").unwrap();
        match ProbMatrix::<f64>::from_csv(&path, 1e-3) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn mean_probabilities_average_rows() {
        let m = simple();
        let means = m.mean_probabilities();
        assert!((means[0] - 0.25).abs() < 1e-12);
        assert!((means[1] - 0.125).abs() < 1e-12);
        assert!((means[2] - 0.625).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn normalized_random_rows_validate(
            raw in proptest::collection::vec(
                proptest::collection::vec(0.01f64..1.0, 4),
                1..6,
            )
        ) {
            let rows: Vec<Vec<f64>> = raw
                .iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.iter().map(|v| v / s).collect()
                })
                .collect();
            let ids: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
            let classes: Vec<String> = (0..4).map(|i| format!("c{i}")).collect();
            let m = ProbMatrix::new(
                ids,
                classes,
                DenseMatrix::from_rows(&rows).unwrap(),
            );
            prop_assert!(m.is_ok());
        }
    }
}
