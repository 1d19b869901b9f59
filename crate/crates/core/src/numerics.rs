//! Dense linear algebra used by the DMD fit: SVD-based pseudoinverse,
//! non-symmetric eigendecomposition with a deterministic ordering, and
//! eigenvector canonicalization.

use std::cmp::Ordering;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexVector = Vec<Complex64>;

/// Relative modulus gap under which two eigenvalues count as tied for sorting.
const MODULUS_TIE_RTOL: f64 = 1e-12;
/// Eigenvalues closer than this (relative to ||A||_F) share a null space.
const CLUSTER_RTOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Thin SVD `a = U diag(sigma) V^H` by one-sided Jacobi rotations, for
/// `rows >= cols`. Returns `(U, sigma, V)` with `V` square and unitary.
/// Stays accurate on exactly rank-deficient input, where the columns of `U`
/// for zero singular values are left as zero.
fn jacobi_svd<T>(mut a: DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.ncols();
    debug_assert!(a.nrows() >= n);
    let mut v = DMatrix::<T>::identity(n, n);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.modulus();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma.unscale(g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut a, &mut v] {
                    for i in 0..m.nrows() {
                        let xp = m[(i, p)];
                        let xq = m[(i, q)];
                        m[(i, p)] = xp.scale(c) - (xq * e.conjugate()).scale(s);
                        m[(i, q)] = (xp * e).scale(s) + xq.scale(c);
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric("Jacobi SVD did not converge".into()));
    }
    let mut sigma = Vec::with_capacity(n);
    for j in 0..n {
        let s = a.column(j).norm();
        if s > 0.0 {
            a.column_mut(j).unscale_mut(s);
        }
        sigma.push(s);
    }
    Ok((a, sigma, v))
}

/// Right singular vectors of a square matrix together with their singular values.
fn right_singular<T>(b: DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (_, sigma, v) = jacobi_svd(b)?;
    Ok((sigma, v))
}

/// A dense real matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix(DMatrix<f64>);

impl RealMatrix {
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let entries = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, entries)
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(RealMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        RealMatrix(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.transpose().iter().copied().collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn matmul(&self, rhs: &RealMatrix) -> Result<RealMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(RealMatrix(&self.0 * &rhs.0))
    }
}

/// One eigenvalue with its unit-norm, phase-canonical right eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: ComplexVector,
}

/// Default relative singular-value cutoff: machine epsilon times the larger dimension.
pub fn default_rcond(a: &RealMatrix) -> f64 {
    f64::EPSILON * a.rows().max(a.cols()) as f64
}

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// `rcond * sigma_max` are treated as zero; `None` selects [`default_rcond`].
pub fn pseudoinverse(a: &RealMatrix, rcond: Option<f64>) -> Result<RealMatrix> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidInput(
            "pseudoinverse of an empty matrix".into(),
        ));
    }
    let rcond = rcond.unwrap_or_else(|| default_rcond(a));
    if !rcond.is_finite() || rcond < 0.0 {
        return Err(Error::InvalidInput(format!(
            "rcond must be finite and >= 0, got {rcond}"
        )));
    }
    let wide = a.rows() < a.cols();
    let tall = if wide { a.0.transpose() } else { a.0.clone() };
    let (u, sigma, v) = jacobi_svd(tall)?;
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = rcond * sigma_max;

    // pinv(B) = sum_k v_k u_k^T / s_k for B = tall; pinv(A) = pinv(A^T)^T.
    let mut pinv = DMatrix::<f64>::zeros(v.nrows(), u.nrows());
    for (k, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        pinv.ger(1.0 / s, &v.column(k), &u.column(k), 1.0);
    }
    let pinv = if wide { pinv.transpose() } else { pinv };
    RealMatrix::from_dmatrix(pinv).map_err(|_| Error::Numeric("non-finite pseudoinverse".into()))
}

fn check_square(a: &RealMatrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

fn raw_eigenvalues(a: &RealMatrix) -> Result<Vec<Complex64>> {
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(a.0.clone(), f64::EPSILON, 10_000 * n)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let vals: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            // Normalize signed zeros so argument-based ordering is stable.
            Complex64::new(z.re + 0.0, z.im + 0.0)
        })
        .collect();
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    Ok(vals)
}

/// Sort order: modulus descending, near-equal moduli grouped and ordered by
/// argument ascending, then by original index.
fn eigen_order(values: &[Complex64]) -> Vec<usize> {
    let moduli: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| moduli[j].total_cmp(&moduli[i]).then(i.cmp(&j)));

    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() {
            let prev = moduli[idx[end - 1]];
            let cur = moduli[idx[end]];
            if prev - cur <= MODULUS_TIE_RTOL * prev.max(cur) {
                end += 1;
            } else {
                break;
            }
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&i, &j| values[i].arg().total_cmp(&values[j].arg()).then(i.cmp(&j)));
        out.extend(group);
        start = end;
    }
    out
}

/// All eigenvalues of `a`, in eig sort order.
pub fn sorted_eigenvalues(a: &RealMatrix) -> Result<Vec<Complex64>> {
    check_square(a)?;
    let vals = raw_eigenvalues(a)?;
    Ok(eigen_order(&vals).into_iter().map(|i| vals[i]).collect())
}

/// Right eigenvector for `sorted[pos]`, taken from the null space of `A - λI`.
/// Repeated eigenvalues take successive singular vectors so that distinct
/// members of a cluster receive distinct vectors.
fn eigenvector_at(a: &RealMatrix, sorted: &[Complex64], pos: usize) -> Result<ComplexVector> {
    let n = a.rows();
    let lambda = sorted[pos];
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let rank_in_cluster = sorted[..pos]
        .iter()
        .filter(|z| (**z - lambda).norm() <= CLUSTER_RTOL * scale)
        .count();

    let v = if lambda.im == 0.0 {
        let mut b = a.0.clone();
        for i in 0..n {
            b[(i, i)] -= lambda.re;
        }
        let (sigma, v) = right_singular(b)?;
        let k = nth_smallest(&sigma, rank_in_cluster);
        v.column(k)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect::<Vec<_>>()
    } else {
        let mut b: DMatrix<Complex64> = a.0.map(|x| Complex64::new(x, 0.0));
        for i in 0..n {
            b[(i, i)] -= lambda;
        }
        let (sigma, v) = right_singular(b)?;
        let k = nth_smallest(&sigma, rank_in_cluster);
        v.column(k).iter().copied().collect::<Vec<_>>()
    };
    canonicalize(&v)
}

fn nth_smallest(values: &[f64], n: usize) -> usize {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    idx[n.min(idx.len() - 1)]
}

/// Full eigendecomposition of a real square matrix, sorted by modulus descending.
pub fn eig(a: &RealMatrix) -> Result<Vec<EigenPair>> {
    let sorted = sorted_eigenvalues(a)?;
    (0..sorted.len())
        .map(|pos| {
            Ok(EigenPair {
                value: sorted[pos],
                vector: eigenvector_at(a, &sorted, pos)?,
            })
        })
        .collect()
}

/// The first pair of [`eig`] without computing the remaining eigenvectors.
pub fn top_eigenpair(a: &RealMatrix) -> Result<EigenPair> {
    let sorted = sorted_eigenvalues(a)?;
    if sorted.is_empty() {
        return Err(Error::InvalidInput(
            "eigendecomposition of an empty matrix".into(),
        ));
    }
    Ok(EigenPair {
        value: sorted[0],
        vector: eigenvector_at(a, &sorted, 0)?,
    })
}

/// Scales `v` to unit 2-norm and rotates its phase so that the largest-modulus
/// entry (lowest index on ties) is real and nonnegative.
pub fn canonicalize(v: &[Complex64]) -> Result<ComplexVector> {
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("vector has non-finite entries".into()));
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput(
            "cannot canonicalize a zero vector".into(),
        ));
    }
    let mut pivot = 0;
    let mut best = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m.partial_cmp(&best) == Some(Ordering::Greater) {
            best = m;
            pivot = i;
        }
    }
    let phase = v[pivot].conj() / v[pivot].norm();
    let mut out: Vec<Complex64> = v.iter().map(|z| z * phase / norm).collect();
    out[pivot] = Complex64::new(out[pivot].norm(), 0.0);
    Ok(out)
}
