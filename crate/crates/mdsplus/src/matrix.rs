//! Dense real matrices plus the centering and decomposition primitives the
//! rest of the library is built on.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance used when checking symmetry of inputs.
const SYMMETRY_TOL: f64 = 1e-10;

/// A dense real matrix with finite entries, at least 1x1.
///
/// Entries are addressed `(row, col)`; constructors take row-major data.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    inner: DMatrix<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let inner = DMatrix::from_row_slice(rows, cols, &entries);
        Self::from_dmatrix(inner)
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let cols = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "ragged rows: expected {cols} columns, found a row with {}",
                bad.len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, flat)
    }

    /// Builds a matrix by evaluating `f(row, col)`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, f: F) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        Self::from_dmatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub(crate) fn from_dmatrix(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        for col in 0..inner.ncols() {
            for row in 0..inner.nrows() {
                if !inner[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { inner })
    }

    /// Wraps a matrix that is known to be finite by construction.
    pub(crate) fn from_dmatrix_unchecked(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.iter().all(|v| v.is_finite()));
        Self { inner }
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner[(row, col)]
    }

    /// One row as an owned vector (storage is column-major internally).
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols()).map(|j| self.inner[(i, j)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Borrows the underlying `nalgebra` storage.
    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.inner
    }
}

impl TryFrom<DMatrix<f64>> for Matrix {
    type Error = Error;

    fn try_from(inner: DMatrix<f64>) -> Result<Self> {
        Self::from_dmatrix(inner)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

/// A matrix of squared Euclidean distances: symmetric, zero diagonal,
/// nonnegative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: Matrix,
}

impl DistanceMatrix {
    /// Validates and canonicalizes a candidate distance matrix.
    ///
    /// Symmetry is required within `1e-10` of the largest entry, the diagonal
    /// within `1e-12` of zero on the same scale, and entries may only be
    /// negative by the same margin. Accepted matrices are stored exactly
    /// symmetric with a zero diagonal and nonnegative entries.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::InvalidDistances(format!(
                "must be square, got {}x{}",
                n,
                m.ncols()
            )));
        }
        let a = m.as_dmatrix();
        let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        let mut max_asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max_asym = max_asym.max((a[(i, j)] - a[(j, i)]).abs());
            }
        }
        if max_asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidDistances(format!(
                "not symmetric: max |d_ij - d_ji| = {max_asym:e}"
            )));
        }
        for i in 0..n {
            if a[(i, i)].abs() > 1e-12 * scale {
                return Err(Error::InvalidDistances(format!(
                    "diagonal entry {i} is {:e}, expected 0",
                    a[(i, i)]
                )));
            }
            for j in 0..n {
                if a[(i, j)] < -1e-12 * scale {
                    return Err(Error::InvalidDistances(format!(
                        "negative entry {:e} at ({i}, {j})",
                        a[(i, j)]
                    )));
                }
            }
        }
        let mut canon = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (0.5 * (a[(i, j)] + a[(j, i)])).max(0.0);
                canon[(i, j)] = v;
                canon[(j, i)] = v;
            }
        }
        Ok(Self {
            m: Matrix::from_dmatrix_unchecked(canon),
        })
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        Self { m }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }
}

/// The double-centered similarity matrix `S = -1/2 H delta H`.
///
/// Symmetric with vanishing row sums; equal to the Gram matrix of the
/// row-centered data when the distances are Euclidean.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    m: Matrix,
}

impl SimilarityMatrix {
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        Self { m }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }
}

/// Eigendecomposition of a symmetric matrix: descending eigenvalues with
/// matching orthonormal eigenvectors (one column per value).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Eigenvalues in descending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector matrix, column `i` matching `values()[i]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Thin singular value decomposition with descending values.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub values: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// Squared Euclidean distances between the rows of `points`.
pub fn pairwise_sq_distances(points: &Matrix) -> DistanceMatrix {
    let n = points.nrows();
    let p = points.ncols();
    // Transposed copy so each original row is a contiguous column slice.
    let t = points.as_dmatrix().transpose();
    let data = t.as_slice();
    let mut delta = DMatrix::zeros(n, n);
    for i in 0..n {
        let ri = &data[i * p..(i + 1) * p];
        for j in (i + 1)..n {
            let rj = &data[j * p..(j + 1) * p];
            let d: f64 = ri
                .iter()
                .zip(rj)
                .map(|(a, b)| {
                    let diff = a - b;
                    diff * diff
                })
                .sum();
            delta[(i, j)] = d;
            delta[(j, i)] = d;
        }
    }
    DistanceMatrix::from_matrix_unchecked(Matrix::from_dmatrix_unchecked(delta))
}

/// Applies the centering projection `H = I - (1/n) 1 1^T` to the rows of `m`,
/// i.e. subtracts each column's mean.
pub fn center_rows(m: &Matrix) -> Matrix {
    let mut out = m.as_dmatrix().clone();
    let n = out.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    Matrix::from_dmatrix_unchecked(out)
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input must be symmetric within `1e-10` relative to its largest entry.
/// Equal eigenvalues keep the solver's original order (stable descending
/// sort), and each eigenvector is oriented so its entry of largest magnitude
/// is positive.
pub fn sym_eig(s: &Matrix) -> Result<SpectralDecomposition> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "sym_eig needs a square matrix, got {}x{}",
            n,
            s.ncols()
        )));
    }
    let a = s.as_dmatrix();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if max_asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric {
            max_asym,
            tol: SYMMETRY_TOL * scale,
        });
    }
    // Work on the exactly symmetric average.
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_column_signs(&mut vectors, None);
    Ok(SpectralDecomposition { values, vectors })
}

/// Thin SVD with nonnegative descending singular values and orthonormal
/// factors; left vectors carry the sign convention of [`sym_eig`].
pub fn svd(m: &Matrix) -> Svd {
    let decomp = m.as_dmatrix().clone().svd(true, true);
    let mut u = decomp.u.expect("svd requested u");
    let mut v = decomp.v_t.expect("svd requested v_t").transpose();
    let raw = decomp.singular_values;
    let k = raw.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let mut u_sorted = DMatrix::zeros(u.nrows(), k);
    let mut v_sorted = DMatrix::zeros(v.nrows(), k);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v.column(src));
    }
    u = u_sorted;
    v = v_sorted;
    fix_column_signs(&mut u, Some(&mut v));
    Svd { u, values, v }
}

/// Orients each column of `a` so its entry of largest magnitude (first such
/// index on ties) is positive; mirrors the flip onto `b` when given.
fn fix_column_signs(a: &mut DMatrix<f64>, mut b: Option<&mut DMatrix<f64>>) {
    for c in 0..a.ncols() {
        let col = a.column(c);
        let mut best = 0usize;
        let mut best_abs = col[0].abs();
        for (i, v) in col.iter().enumerate().skip(1) {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            a.column_mut(c).neg_mut();
            if let Some(other) = b.as_deref_mut() {
                other.column_mut(c).neg_mut();
            }
        }
    }
}
