//! Singular value decomposition: exact one-sided Jacobi for small widths and
//! a seeded randomized range-finder for wide matrices.

use super::{qr_thin, DenseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Widths up to this use the exact Jacobi path; wider matrices use the
/// randomized algorithm.
pub const EXACT_SVD_MAX_COLS: usize = 512;

/// Extra random probe columns beyond the requested rank.
pub const DEFAULT_OVERSAMPLE: usize = 10;

/// Power iterations applied by the randomized range finder.
pub const DEFAULT_POWER_ITERS: usize = 4;

/// Singular value decomposition `A = U diag(s) Vt`, values nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd<F> {
    /// Left singular vectors, one per column.
    pub u: DenseMatrix<F>,
    /// Singular values, sorted in nonincreasing order.
    pub s: Vec<F>,
    /// Right singular vectors, one per row.
    pub vt: DenseMatrix<F>,
}

impl<F: Scalar> Svd<F> {
    /// Keeps only the leading `k` singular triplets.
    pub fn truncate(mut self, k: usize) -> Svd<F> {
        let k = k.min(self.s.len());
        self.s.truncate(k);
        let u = DenseMatrix::from_vec(
            self.u.rows(),
            k,
            (0..self.u.rows())
                .flat_map(|r| self.u.row(r)[..k].to_vec())
                .collect(),
        )
        .expect("truncated U shape");
        let vt = self.vt.select_rows(&(0..k).collect::<Vec<_>>());
        Svd { u, s: self.s, vt }
    }

    /// Reconstructs `U diag(s) Vt`.
    pub fn reconstruct(&self) -> DenseMatrix<F> {
        let mut scaled = self.u.clone();
        for r in 0..scaled.rows() {
            for (c, &sv) in self.s.iter().enumerate() {
                let v = scaled.get(r, c) * sv;
                scaled.set(r, c, v);
            }
        }
        scaled.matmul(&self.vt).expect("shapes agree by construction")
    }
}

/// Truncated SVD of `a`, keeping `k` components.
///
/// Matrices with at most [`EXACT_SVD_MAX_COLS`] columns are decomposed
/// exactly by one-sided Jacobi rotations; wider matrices use a seeded
/// randomized range finder with [`DEFAULT_OVERSAMPLE`] extra probes and
/// [`DEFAULT_POWER_ITERS`] power iterations, which is accurate for the
/// rapidly decaying spectra produced by document matrices. The same `seed`
/// always yields the same decomposition.
pub fn svd_truncated<F: Scalar>(a: &DenseMatrix<F>, k: usize, seed: u64) -> Result<Svd<F>> {
    let (m, n) = a.shape();
    let max_rank = m.min(n);
    if k == 0 || k > max_rank {
        return Err(Error::dim(
            "svd component count",
            format!("1..={max_rank}"),
            k,
        ));
    }
    a.ensure_finite("svd input")?;
    if n <= EXACT_SVD_MAX_COLS {
        Ok(svd_jacobi(a).truncate(k))
    } else {
        svd_randomized(a, k, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS, seed)
    }
}

/// Full SVD by one-sided Jacobi rotations (Hestenes).
///
/// Returns `min(m, n)` singular triplets. Columns of `U` that correspond to
/// zero singular values are left as zero vectors.
pub fn svd_jacobi<F: Scalar>(a: &DenseMatrix<F>) -> Svd<F> {
    let (m, n) = a.shape();
    if m < n {
        // Jacobi wants tall input: decompose the transpose and swap factors.
        let svd_t = svd_jacobi(&a.transpose());
        return Svd {
            u: svd_t.vt.transpose(),
            s: svd_t.s,
            vt: svd_t.u.transpose(),
        };
    }

    let mut w = a.clone();
    let mut v = DenseMatrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, F::one());
    }

    let eps = F::epsilon() * F::c(8.0);
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = F::zero();
                let mut beta = F::zero();
                let mut gamma = F::zero();
                for r in 0..m {
                    let wp = w.get(r, p);
                    let wq = w.get(r, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == F::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (F::c(2.0) * gamma);
                let t = if zeta >= F::zero() {
                    F::one() / (zeta + (F::one() + zeta * zeta).sqrt())
                } else {
                    -F::one() / (-zeta + (F::one() + zeta * zeta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let wp = w.get(r, p);
                    let wq = w.get(r, q);
                    w.set(r, p, c * wp - s * wq);
                    w.set(r, q, s * wp + c * wq);
                }
                for r in 0..n {
                    let vp = v.get(r, p);
                    let vq = v.get(r, q);
                    v.set(r, p, c * vp - s * vq);
                    v.set(r, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Singular values are the column norms; sort triplets descending.
    let mut norms: Vec<F> = (0..n)
        .map(|c| (0..m).map(|r| w.get(r, c) * w.get(r, c)).sum::<F>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms").then(i.cmp(&j)));

    let tiny = norms
        .iter()
        .fold(F::zero(), |acc, &x| if x > acc { x } else { acc })
        * F::epsilon()
        * F::c(m as f64);
    let mut u = DenseMatrix::zeros(m, n);
    let mut vt = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (out_c, &src_c) in order.iter().enumerate() {
        let sv = norms[src_c];
        s.push(sv);
        if sv > tiny && sv > F::zero() {
            for r in 0..m {
                u.set(r, out_c, w.get(r, src_c) / sv);
            }
        }
        for r in 0..n {
            vt.set(out_c, r, v.get(r, src_c));
        }
        norms[src_c] = sv;
    }
    Svd { u, s, vt }
}

/// Randomized truncated SVD (range finder with power iterations).
fn svd_randomized<F: Scalar>(
    a: &DenseMatrix<F>,
    k: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<Svd<F>> {
    let (m, n) = a.shape();
    let l = (k + oversample).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut omega = DenseMatrix::zeros(n, l);
    for r in 0..n {
        for c in 0..l {
            omega.set(r, c, standard_normal(&mut rng));
        }
    }

    let at = a.transpose();
    let y = a.matmul(&omega)?;
    let (mut q, _) = qr_thin(&y)?;
    for _ in 0..power_iters {
        let z = at.matmul(&q)?;
        let (qz, _) = qr_thin(&z)?;
        let y = a.matmul(&qz)?;
        let (qy, _) = qr_thin(&y)?;
        q = qy;
    }

    let b = q.transpose().matmul(a)?; // l x n
    let small = svd_jacobi(&b).truncate(k);
    let u = q.matmul(&small.u)?;
    Ok(Svd {
        u,
        s: small.s,
        vt: small.vt,
    })
}

/// One standard-normal draw via the Box-Muller transform.
fn standard_normal<F: Scalar>(rng: &mut ChaCha8Rng) -> F {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random::<f64>();
    F::c((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
}
