//! The embedding estimators: classical MDS, hard thresholding (SVHT),
//! generic eigenvalue shrinkage, and MDS+ (the optimal shrinker with
//! data-driven dimension).
//!
//! All of them share one pipeline: double-center the squared distances into
//! the similarity matrix `S`, diagonalize, then choose per-axis values from
//! the square roots of the eigenvalues. [`MdsDecomposition`] exposes the
//! shared part so several estimators can reuse one diagonalization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{sym_eig, DistanceMatrix, Matrix, SimilarityMatrix};
use crate::noise::estimate_sigma;
use crate::spike::SpikeParams;

/// How an embedding chose its per-axis values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingMethod {
    Classical,
    Tsvd,
    Svht,
    Shrinker,
    MdsPlus,
}

impl EmbeddingMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingMethod::Classical => "classical",
            EmbeddingMethod::Tsvd => "tsvd",
            EmbeddingMethod::Svht => "svht",
            EmbeddingMethod::Shrinker => "shrinker",
            EmbeddingMethod::MdsPlus => "mds_plus",
        }
    }
}

impl std::fmt::Display for EmbeddingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Noise level for estimators that need one: supplied or estimated from the
/// spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSpec {
    Known(f64),
    Auto,
}

/// An `n x r` embedding. Coordinate columns are mutually orthogonal and
/// column `i` has Euclidean norm `axis_values[i]`; `r` may be zero.
#[derive(Debug, Clone)]
pub struct Embedding {
    method: EmbeddingMethod,
    coords: DMatrix<f64>,
    axis_values: Vec<f64>,
    clipped: usize,
    sigma_used: Option<f64>,
    beta: Option<f64>,
    note: Option<String>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    /// Embedding dimension; zero when nothing was retained.
    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn method(&self) -> EmbeddingMethod {
        self.method
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// Retained (possibly shrunken) singular values, one per axis, descending.
    pub fn axis_values(&self) -> &[f64] {
        &self.axis_values
    }

    /// Number of negative eigenvalues clipped to zero before the square root.
    pub fn clipped_count(&self) -> usize {
        self.clipped
    }

    /// Noise level the estimator actually used, when it used one.
    pub fn sigma_used(&self) -> Option<f64> {
        self.sigma_used
    }

    /// Aspect ratio `(n - 1) / p`, when the estimator knew `p`.
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// Diagnostic note, e.g. when the requested dimension was reduced or the
    /// data-driven dimension came out empty.
    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    /// Coordinates as a [`Matrix`]; `None` for an empty embedding.
    pub fn to_matrix(&self) -> Option<Matrix> {
        if self.dim() == 0 {
            None
        } else {
            Some(Matrix::from_dmatrix_unchecked(self.coords.clone()))
        }
    }
}

/// Forms `S = -1/2 H delta H` by double centering.
pub fn similarity_from_distances(delta: &DistanceMatrix) -> SimilarityMatrix {
    let n = delta.n();
    let d = delta.as_matrix().as_dmatrix();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| d.row(i).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let s = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (d[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    SimilarityMatrix::from_matrix_unchecked(Matrix::from_dmatrix_unchecked(s))
}

/// The shared diagonalization: eigenvalues of `S` (descending, raw) and the
/// matching eigenvectors.
#[derive(Debug, Clone)]
pub struct MdsDecomposition {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl MdsDecomposition {
    /// Raw eigenvalues of `S`, descending; may contain small negatives when
    /// the input distances are not exactly Euclidean.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    /// Numerical-rank floor: eigenvalues at or below `eps * n * max|d_i|`
    /// are solver noise around a structural zero, not signal.
    fn rank_floor(&self) -> f64 {
        let maxabs = self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        f64::EPSILON * self.values.len() as f64 * maxabs
    }

    /// Count of positive eigenvalues (above the numerical-rank floor).
    pub fn positive_count(&self) -> usize {
        let floor = self.rank_floor();
        self.values.iter().take_while(|&&v| v > floor).count()
    }

    fn clipped_count(&self) -> usize {
        self.values.iter().filter(|&&v| v < 0.0).count()
    }

    /// Square roots of the leading positive eigenvalues: the observed
    /// singular values `sqrt(d_i)`.
    pub fn singular_values(&self) -> Vec<f64> {
        self.values[..self.positive_count()]
            .iter()
            .map(|v| v.sqrt())
            .collect()
    }

    fn embed(
        &self,
        kept: usize,
        axis_values: Vec<f64>,
        method: EmbeddingMethod,
        sigma_used: Option<f64>,
        beta: Option<f64>,
        note: Option<String>,
    ) -> Embedding {
        debug_assert_eq!(kept, axis_values.len());
        let n = self.n();
        let mut coords = DMatrix::zeros(n, kept);
        for (c, &val) in axis_values.iter().enumerate() {
            coords.set_column(c, &(self.vectors.column(c) * val));
        }
        Embedding {
            method,
            coords,
            axis_values,
            clipped: self.clipped_count(),
            sigma_used,
            beta,
            note,
        }
    }
}

/// Diagonalizes the similarity matrix of `delta`.
pub fn mds_decompose(delta: &DistanceMatrix) -> MdsDecomposition {
    let s = similarity_from_distances(delta);
    let dec = sym_eig(s.as_matrix()).expect("S is symmetric by construction");
    MdsDecomposition {
        values: dec.values().to_vec(),
        vectors: dec.vectors().clone(),
    }
}

/// Classical MDS into (at most) `r` dimensions: axes are `sqrt(d_i) u_i` for
/// the `r` largest positive eigenvalues. When fewer than `r` eigenvalues are
/// positive the dimension shrinks accordingly and a note records it.
pub fn classical_mds(delta: &DistanceMatrix, r: usize) -> Embedding {
    classical_from(&mds_decompose(delta), r)
}

/// [`classical_mds`] on a precomputed decomposition.
pub fn classical_from(dec: &MdsDecomposition, r: usize) -> Embedding {
    let kept = r.min(dec.positive_count());
    let note = (kept < r).then(|| {
        format!(
            "requested dimension {r} reduced to {kept}: only {kept} positive eigenvalues",
        )
    });
    let axis_values: Vec<f64> = dec.values[..kept].iter().map(|v| v.sqrt()).collect();
    dec.embed(kept, axis_values, EmbeddingMethod::Classical, None, None, note)
}

/// Hard thresholding: keeps every axis with `sqrt(d_i) > lambda`, values
/// unshrunk.
pub fn svht_embed(delta: &DistanceMatrix, lambda: f64) -> Result<Embedding> {
    svht_from(&mds_decompose(delta), lambda)
}

/// [`svht_embed`] on a precomputed decomposition.
pub fn svht_from(dec: &MdsDecomposition, lambda: f64) -> Result<Embedding> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hard threshold must be positive, got {lambda}"
        )));
    }
    let floor = dec.rank_floor();
    let axis_values: Vec<f64> = dec
        .values
        .iter()
        .take_while(|&&v| v > floor && v.sqrt() > lambda)
        .map(|v| v.sqrt())
        .collect();
    let kept = axis_values.len();
    Ok(dec.embed(kept, axis_values, EmbeddingMethod::Svht, None, None, None))
}

/// Generic shrinkage: axis `i` is retained iff `eta(sqrt(d_i)) > 0`, with
/// that value. `eta` must be nondecreasing with `eta(0) = 0`.
pub fn shrinkage_embed<F>(delta: &DistanceMatrix, eta: F) -> Embedding
where
    F: Fn(f64) -> f64,
{
    shrinkage_from(&mds_decompose(delta), eta)
}

/// [`shrinkage_embed`] on a precomputed decomposition.
pub fn shrinkage_from<F>(dec: &MdsDecomposition, eta: F) -> Embedding
where
    F: Fn(f64) -> f64,
{
    let floor = dec.rank_floor();
    let axis_values: Vec<f64> = dec
        .values
        .iter()
        .map(|&v| if v > floor { eta(v.sqrt()) } else { eta(0.0) })
        .take_while(|&s| s > 0.0)
        .collect();
    let kept = axis_values.len();
    dec.embed(kept, axis_values, EmbeddingMethod::Shrinker, None, None, None)
}

/// MDS+: data-driven dimension (axes above the bulk edge) with optimally
/// shrunken axis values. `p` is the ambient dimension of the observed data;
/// the noise level comes from `sigma` or, with [`SigmaSpec::Auto`], from the
/// median-based estimator (requires `n >= 8`).
pub fn mds_plus(delta: &DistanceMatrix, p: usize, sigma: SigmaSpec) -> Result<Embedding> {
    mds_plus_from(&mds_decompose(delta), p, sigma)
}

/// [`mds_plus`] on a precomputed decomposition.
pub fn mds_plus_from(dec: &MdsDecomposition, p: usize, sigma: SigmaSpec) -> Result<Embedding> {
    let n = dec.n();
    let sigma_val = match sigma {
        SigmaSpec::Known(s) => {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "sigma must be positive, got {s}"
                )));
            }
            s
        }
        SigmaSpec::Auto => {
            let k = n.min(p);
            estimate_sigma(&dec.values[..k.min(dec.values.len())], n, p)?
        }
    };
    let params = SpikeParams::from_shape(n, p, sigma_val)?;
    let edge = params.bulk_edge();
    let floor = dec.rank_floor();
    let axis_values: Vec<f64> = dec
        .values
        .iter()
        .take_while(|&&v| v > floor && v.sqrt() > edge)
        .map(|&v| params.optimal_shrinker(v.sqrt()))
        .collect();
    let kept = axis_values.len();
    let note = (kept == 0).then(|| {
        format!(
            "no eigenvalue above the bulk edge {edge:.6e}: estimated embedding dimension is 0",
        )
    });
    Ok(dec.embed(
        kept,
        axis_values,
        EmbeddingMethod::MdsPlus,
        Some(sigma_val),
        Some(params.beta()),
        note,
    ))
}
