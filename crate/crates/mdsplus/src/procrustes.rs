//! The similarity distance used to score embeddings: both point sets are
//! row-centered, zero-padded to a common width and aligned by the best
//! orthogonal transform (rotations and reflections) in Frobenius norm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Result of aligning two point sets: the minimal Frobenius distance and an
/// orthogonal matrix achieving it.
#[derive(Debug, Clone)]
pub struct AlignedPair {
    /// Minimal value of the centered, padded Frobenius distance.
    pub distance: f64,
    /// An `l x l` orthogonal matrix realizing the minimum (applied on the
    /// right of the second argument). Not unique when the cross-product is
    /// rank deficient; the distance is unique regardless.
    pub rotation: Matrix,
    /// Common width both inputs were padded to: `max(d, r)`.
    pub l: usize,
}

fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let n = out.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

fn pad_cols(m: &DMatrix<f64>, l: usize) -> DMatrix<f64> {
    if m.ncols() == l {
        return m.clone();
    }
    let mut out = DMatrix::zeros(m.nrows(), l);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

/// Core alignment on raw matrices; accepts zero-column inputs so empty
/// embeddings can be scored.
pub(crate) fn align_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<AlignedPair> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "row counts differ: {} vs {}",
            n,
            b.nrows()
        )));
    }
    let l = a.ncols().max(b.ncols());
    if l == 0 {
        return Err(Error::EmptyMatrix);
    }
    if n <= l {
        return Err(Error::DimensionMismatch(format!(
            "need more rows than the padded width: n = {n}, max(d, r) = {l}"
        )));
    }
    let ca = pad_cols(&centered(a), l);
    let cb = pad_cols(&centered(b), l);
    // min over orthogonal R of ||ca - cb R||_F via the polar factor of cb^T ca
    let cross = cb.transpose() * &ca;
    let svd = cross.svd(true, true);
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let rotation = &u * &v_t;
    // evaluate the residual at the minimizer directly; the trace identity
    // ||ca||^2 + ||cb||^2 - 2 tr(S) cancels catastrophically near zero
    let distance = (&ca - &cb * &rotation).norm();
    Ok(AlignedPair {
        distance,
        rotation: Matrix::from_dmatrix_unchecked(rotation),
        l,
    })
}

/// Similarity distance between two point sets with equal row counts.
///
/// Invariant to rotations and reflections of either set, to translations,
/// and to constant-column padding; a pseudo-metric when the widths agree.
pub fn similarity_distance(a: &Matrix, b: &Matrix) -> Result<AlignedPair> {
    align_raw(a.as_dmatrix(), b.as_dmatrix())
}

/// Embedding loss: the squared similarity distance between the embedding and
/// the reference configuration.
pub fn embedding_loss(xhat: &Matrix, x: &Matrix) -> Result<f64> {
    let aligned = similarity_distance(xhat, x)?;
    Ok(aligned.distance * aligned.distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0)).unwrap()
    }

    fn random_orthogonal(rng: &mut impl Rng, k: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0f64));
        g.qr().q()
    }

    #[test]
    fn identical_inputs_have_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let a = random_matrix(&mut rng, 8, 3);
        let pair = similarity_distance(&a, &a).unwrap();
        assert!(pair.distance <= 1e-10);
    }

    #[test]
    fn rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 9, 3);
            let q = random_orthogonal(&mut rng, 3);
            let b = Matrix::from_dmatrix_unchecked(a.as_dmatrix() * q);
            assert!(similarity_distance(&a, &b).unwrap().distance <= 1e-9);
        }
    }

    #[test]
    fn one_dimensional_hand_example() {
        let a = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let pair = similarity_distance(&a, &b).unwrap();
        assert_abs_diff_eq!(pair.distance, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(embedding_loss(&a, &b).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a = random_matrix(&mut rng, 10, 2);
        let b = random_matrix(&mut rng, 10, 2);
        let shift: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b_shifted = Matrix::from_fn(10, 2, |i, j| b.get(i, j) + shift[j]).unwrap();
        let base = embedding_loss(&a, &b).unwrap();
        let shifted = embedding_loss(&a, &b_shifted).unwrap();
        assert!((base - shifted).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn constant_column_padding_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_matrix(&mut rng, 12, 2);
        let b = random_matrix(&mut rng, 12, 2);
        let c = rng.random_range(-3.0..3.0);
        let padded = Matrix::from_fn(12, 3, |i, j| if j < 2 { a.get(i, j) } else { c }).unwrap();
        let base = similarity_distance(&a, &b).unwrap().distance;
        let with_pad = similarity_distance(&padded, &b).unwrap().distance;
        assert!((base - with_pad).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn pseudo_metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 11, 3);
            let b = random_matrix(&mut rng, 11, 3);
            let c = random_matrix(&mut rng, 11, 3);
            let ab = similarity_distance(&a, &b).unwrap().distance;
            let ba = similarity_distance(&b, &a).unwrap().distance;
            let ac = similarity_distance(&a, &c).unwrap().distance;
            let cb = similarity_distance(&c, &b).unwrap().distance;
            assert!((ab - ba).abs() <= 1e-10 * ab.max(1.0));
            assert!(ab <= ac + cb + 1e-9);
        }
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let a = random_matrix(&mut rng, 9, 4);
        let b = random_matrix(&mut rng, 9, 2);
        let pair = similarity_distance(&a, &b).unwrap();
        assert_eq!(pair.l, 4);
        let r = pair.rotation.as_dmatrix();
        let gram = r.transpose() * r;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_matches_brute_force_over_o2() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..4 {
            let a = random_matrix(&mut rng, 7, 2);
            let b = random_matrix(&mut rng, 7, 2);
            let closed = similarity_distance(&a, &b).unwrap().distance;
            let ca = centered(a.as_dmatrix());
            let cb = centered(b.as_dmatrix());
            let mut best = f64::INFINITY;
            let net = 10_000usize;
            for k in 0..net {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / net as f64;
                let (s, c) = theta.sin_cos();
                for refl in [1.0, -1.0] {
                    // rotation, then optionally a reflection across the x axis
                    let r = DMatrix::from_row_slice(2, 2, &[c, -s * refl, s, c * refl]);
                    best = best.min((&ca - &cb * r).norm());
                }
            }
            assert!(
                (closed - best).abs() <= 1e-6 * best.max(1.0),
                "closed {closed} vs net {best}"
            );
            assert!(closed <= best + 1e-12);
        }
    }

    #[test]
    fn row_count_mismatch_is_an_error() {
        let a = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(similarity_distance(&a, &b).is_err());
    }
}
