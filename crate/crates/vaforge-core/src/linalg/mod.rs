//! Dense row-major matrices and the small set of factorizations the pipeline
//! needs (thin QR, singular value decomposition).
//!
//! Desk-scale feature matrices are small enough that straightforward loops are
//! the right tool; the only numerically subtle pieces are the factorizations
//! in [`svd`], which are verified against an independent oracle in tests.

mod svd;

pub use svd::{svd_truncated, Svd, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS, EXACT_SVD_MAX_COLS};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> DenseMatrix<F> {
    /// Creates a matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    /// Wraps a row-major buffer, checking that its length matches the shape.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(
                "matrix buffer",
                format!("{} values for {rows}x{cols}", rows * cols),
                data.len(),
            ));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::dim(&format!("row {i}"), cols, row.len()));
            }
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `(rows, cols)` pair.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Value at `(r, c)`.
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }

    /// Sets the value at `(r, c)`.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F) {
        self.data[r * self.cols + c] = v;
    }

    /// Row `r` as a slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Row `r` as a mutable slice.
    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Column `c` as an owned vector.
    pub fn col(&self, c: usize) -> Vec<F> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// The underlying row-major buffer.
    pub fn data(&self) -> &[F] {
        &self.data
    }

    /// Mutable access to the underlying row-major buffer.
    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    /// Transposed copy.
    pub fn transpose(&self) -> DenseMatrix<F> {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if self.cols != other.rows {
            return Err(Error::dim(
                "matmul inner dimension",
                self.cols,
                other.rows,
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let a_row = self.row(r);
            let out_row = out.row_mut(r);
            for (k, &a) in a_row.iter().enumerate() {
                if a == F::zero() {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Element-wise sum `self + other`.
    pub fn add(&self, other: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if self.shape() != other.shape() {
            return Err(Error::dim(
                "element-wise sum",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Element-wise difference `self - other`.
    pub fn sub(&self, other: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if self.shape() != other.shape() {
            return Err(Error::dim(
                "element-wise difference",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
        if self.rows != other.rows {
            return Err(Error::dim("hstack row count", self.rows, other.rows));
        }
        let mut out = DenseMatrix::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            out.row_mut(r)[..self.cols].copy_from_slice(self.row(r));
            out.row_mut(r)[self.cols..].copy_from_slice(other.row(r));
        }
        Ok(out)
    }

    /// Copy of the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix<F> {
        let mut out = DenseMatrix::zeros(indices.len(), self.cols);
        for (i, &r) in indices.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(r));
        }
        out
    }

    /// Per-column means; zero-length input gives zeros.
    pub fn col_means(&self) -> Vec<F> {
        let mut means = vec![F::zero(); self.cols];
        if self.rows == 0 {
            return means;
        }
        for r in 0..self.rows {
            for (m, &v) in means.iter_mut().zip(self.row(r)) {
                *m += v;
            }
        }
        let n = F::c(self.rows as f64);
        for m in &mut means {
            *m /= n;
        }
        means
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> F {
        self.data
            .iter()
            .map(|&v| v * v)
            .fold(F::zero(), |acc, v| acc + v)
            .sqrt()
    }

    /// Errors if any entry is NaN or infinite.
    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        for (i, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                let (r, c) = (i / self.cols.max(1), i % self.cols.max(1));
                return Err(Error::NonFinite(format!(
                    "{context}: entry ({r}, {c}) is {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Thin QR decomposition via Householder reflections.
///
/// For an `m x n` input with `m >= n`, returns `(Q, R)` with `Q` of shape
/// `m x n` having orthonormal columns and `R` upper triangular `n x n`.
/// Rank-deficient inputs still yield an orthonormal `Q`.
pub fn qr_thin<F: Scalar>(a: &DenseMatrix<F>) -> Result<(DenseMatrix<F>, DenseMatrix<F>)> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::dim("thin QR requires rows >= cols", format!(">= {n} rows"), m));
    }
    let mut r = a.clone();
    // Householder vectors, one per column, stored as full-length columns.
    let mut vs: Vec<Vec<F>> = Vec::with_capacity(n);
    for j in 0..n {
        // Build the reflector that zeroes column j below the diagonal.
        let mut v = vec![F::zero(); m];
        let mut norm = F::zero();
        for i in j..m {
            let x = r.get(i, j);
            v[i] = x;
            norm += x * x;
        }
        let norm = norm.sqrt();
        if norm > F::zero() {
            let sign = if v[j] >= F::zero() { F::one() } else { -F::one() };
            v[j] += sign * norm;
            let vnorm = v[j..].iter().map(|&x| x * x).sum::<F>().sqrt();
            if vnorm > F::zero() {
                for x in &mut v[j..] {
                    *x /= vnorm;
                }
                // Apply I - 2vv^T to the remaining columns.
                for c in j..n {
                    let dot = (j..m).map(|i| v[i] * r.get(i, c)).sum::<F>();
                    let two_dot = F::c(2.0) * dot;
                    for i in j..m {
                        let val = r.get(i, c) - two_dot * v[i];
                        r.set(i, c, val);
                    }
                }
            } else {
                v[j..].iter_mut().for_each(|x| *x = F::zero());
            }
        }
        vs.push(v);
    }
    // Accumulate Q by applying the reflectors in reverse to the identity.
    let mut q = DenseMatrix::zeros(m, n);
    for j in 0..n {
        q.set(j, j, F::one());
    }
    for (j, v) in vs.iter().enumerate().rev() {
        if v[j..].iter().all(|&x| x == F::zero()) {
            continue;
        }
        for c in 0..n {
            let dot = (j..m).map(|i| v[i] * q.get(i, c)).sum::<F>();
            let two_dot = F::c(2.0) * dot;
            for i in j..m {
                let val = q.get(i, c) - two_dot * v[i];
                q.set(i, c, val);
            }
        }
    }
    let mut r_out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r_out.set(i, j, r.get(i, j));
        }
    }
    Ok((q, r_out))
}
