//! Closed-form asymptotics for the spiked model: the forward and inverse maps
//! between signal and observed singular values, limiting cosines, the optimal
//! hard threshold, the optimal shrinker, and the asymptotic losses of
//! classical MDS and MDS+.
//!
//! Every map works on the singular-value scale. Signal singular values below
//! the detection point `sigma * beta^(1/4)` are asymptotically invisible;
//! observed values at or below the bulk edge `sigma * (1 + sqrt(beta))` carry
//! no signal. All formulas accept `beta > 1` unchanged.

use crate::error::{Error, Result};

/// Aspect ratio and noise level governing the spiked-model asymptotics.
///
/// `beta = (n - 1) / p`; per-coordinate noise variance is `sigma^2 / p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeParams {
    beta: f64,
    sigma: f64,
}

impl SpikeParams {
    pub fn new(beta: f64, sigma: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { beta, sigma })
    }

    /// Aspect ratio from sample count and ambient dimension: `(n - 1) / p`.
    pub fn from_shape(n: usize, p: usize, sigma: f64) -> Result<Self> {
        if n < 2 || p == 0 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 2 and p >= 1 to form beta, got n = {n}, p = {p}"
            )));
        }
        Self::new((n - 1) as f64 / p as f64, sigma)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Top of the noise-only singular value support: `sigma * (1 + sqrt(beta))`.
    pub fn bulk_edge(&self) -> f64 {
        self.sigma * (1.0 + self.beta.sqrt())
    }

    /// Smallest signal singular value that remains detectable:
    /// `sigma * beta^(1/4)`.
    pub fn detection_point(&self) -> f64 {
        self.sigma * self.beta.powf(0.25)
    }

    /// Limiting observed singular value for a signal singular value `x` at or
    /// above the detection point; always at or above the bulk edge.
    pub fn observed_from_signal(&self, x: f64) -> Result<f64> {
        let u = x / self.sigma;
        let thresh = self.beta.powf(0.25);
        if !(u.is_finite() && u >= thresh) {
            return Err(Error::OutOfDomain(format!(
                "signal value {x} is below the detection point {}",
                self.detection_point()
            )));
        }
        Ok(self.sigma * ((u + 1.0 / u) * (u + self.beta / u)).sqrt())
    }

    /// Limiting cosine between the top left singular vectors of the signal
    /// and the observation, for `x` at or above the detection point.
    pub fn limit_cosine(&self, x: f64) -> Result<f64> {
        let u = x / self.sigma;
        let thresh = self.beta.powf(0.25);
        if !(u.is_finite() && u >= thresh) {
            return Err(Error::OutOfDomain(format!(
                "signal value {x} is below the detection point {}",
                self.detection_point()
            )));
        }
        let u2 = u * u;
        let num = (u2 * u2 - self.beta).max(0.0);
        Ok((num / (u2 * u2 + self.beta * u2)).sqrt())
    }

    /// Inverse of [`observed_from_signal`](Self::observed_from_signal):
    /// recovers the signal singular value from an observed one at or above
    /// the bulk edge.
    pub fn signal_from_observed(&self, y: f64) -> Result<f64> {
        let w = y / self.sigma;
        let edge = 1.0 + self.beta.sqrt();
        if !(w.is_finite() && w >= edge) {
            return Err(Error::OutOfDomain(format!(
                "observed value {y} is below the bulk edge {}",
                self.bulk_edge()
            )));
        }
        let shifted = w * w - 1.0 - self.beta;
        let disc = (shifted * shifted - 4.0 * self.beta).max(0.0);
        Ok(self.sigma * ((shifted + disc.sqrt()) / 2.0).sqrt())
    }

    /// The unique loss-optimal shrinker applied to observed singular values.
    ///
    /// Vanishes at and below the bulk edge, equals `x(y) * c(x(y))` above it,
    /// and never exceeds its argument.
    pub fn optimal_shrinker(&self, y: f64) -> f64 {
        if y <= self.bulk_edge() {
            return 0.0;
        }
        let x = self
            .signal_from_observed(y)
            .expect("above bulk edge by construction");
        let u2 = (x / self.sigma).powi(2);
        let inner = u2 - self.beta - self.beta * (1.0 - self.beta) / (u2 + self.beta);
        self.sigma * inner.max(0.0).sqrt()
    }

    /// The unique loss-optimal hard threshold for observed singular values;
    /// always strictly above the bulk edge.
    pub fn optimal_hard_threshold(&self) -> f64 {
        let a = threshold_cubic_root(self.beta);
        let sa = a.sqrt();
        self.sigma * ((sa + 1.0 / sa) * (sa + self.beta / sa)).sqrt()
    }
}

/// The cubic whose unique positive root locates the optimal hard threshold
/// on the squared normalized-signal scale.
pub(crate) fn threshold_cubic(a: f64, beta: f64) -> f64 {
    -3.0 * a * a * a
        + (2.0 * beta + 1.0) * a * a
        + (beta * beta + 6.0 * beta) * a
        + beta * beta
}

/// Unique positive root of the threshold cubic, by bracketed bisection.
///
/// The root exceeds `sqrt(beta)` (where the cubic is still positive), so the
/// bracket starts there and doubles an upper endpoint until the sign flips.
pub(crate) fn threshold_cubic_root(beta: f64) -> f64 {
    let mut lo = beta.sqrt();
    debug_assert!(threshold_cubic(lo, beta) > 0.0);
    let mut hi = beta.sqrt() + 1.0;
    while threshold_cubic(hi, beta) >= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if threshold_cubic(mid, beta) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Signal singular values, strictly descending and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpectrum {
    values: Vec<f64>,
}

impl SignalSpectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "signal spectrum must hold at least one value".to_string(),
            ));
        }
        for w in values.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "signal values must be strictly descending, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if !values.iter().all(|&v| v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(
                "signal values must be positive and finite".to_string(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of spikes strictly above the detection point.
    pub fn detectable_count(&self, params: &SpikeParams) -> usize {
        let thresh = params.detection_point();
        self.values.iter().take_while(|&&x| x > thresh).count()
    }
}

/// Number of eigenvalues of `S` whose square roots exceed the optimal hard
/// threshold; the loss-optimal embedding dimension for classical MDS.
pub fn optimal_embedding_dim(s_eigenvalues: &[f64], params: &SpikeParams) -> usize {
    let lambda = params.optimal_hard_threshold();
    s_eigenvalues
        .iter()
        .take_while(|&&d| d > 0.0 && d.sqrt() > lambda)
        .count()
}

/// Asymptotic loss of classical MDS with embedding dimension `r`.
pub fn mds_asymptotic_loss(spectrum: &SignalSpectrum, r: usize, params: &SpikeParams) -> f64 {
    let beta = params.beta();
    let sigma = params.sigma();
    let t = spectrum.detectable_count(params);
    let kept = t.min(r);
    let mut loss = 0.0;
    for &x in &spectrum.values()[..kept] {
        let x2 = x * x;
        let aligned = ((x2 * x2 - beta * sigma.powi(4)).max(0.0) / x2).sqrt();
        let gap = (x2 + sigma * sigma).sqrt() - aligned;
        loss += gap * gap + 2.0 * beta * sigma.powi(4) / x2 + beta * sigma * sigma;
    }
    for &x in &spectrum.values()[kept..] {
        loss += x * x;
    }
    loss += r.saturating_sub(t) as f64 * (params.bulk_edge() * params.bulk_edge());
    loss
}

/// Asymptotic loss of MDS+ (the optimal shrinker); independent of `r`, which
/// the shrinker chooses itself.
pub fn mdsplus_asymptotic_loss(spectrum: &SignalSpectrum, params: &SpikeParams) -> f64 {
    let beta = params.beta();
    let sigma = params.sigma();
    let t = spectrum.detectable_count(params);
    let mut inner = 0.0;
    for &x in &spectrum.values()[..t] {
        let u2 = (x / sigma).powi(2);
        inner += (1.0 - beta) / (u2 + beta);
    }
    let mut loss = beta * sigma * sigma * (inner + t as f64);
    for &x in &spectrum.values()[t..] {
        loss += x * x;
    }
    loss
}

/// Asymptotic excess loss of classical MDS (dimension `r`) over MDS+.
///
/// Summed per spike over the theorem's three regimes plus one bulk-edge term
/// for every noise axis the truncation keeps; always nonnegative and equal to
/// the difference of the two loss formulas.
pub fn regret(spectrum: &SignalSpectrum, r: usize, params: &SpikeParams) -> f64 {
    let beta = params.beta();
    let sigma = params.sigma();
    let t = spectrum.detectable_count(params);
    let mut total = 0.0;
    for (i, &x) in spectrum.values()[..t].iter().enumerate() {
        let u2 = (x / sigma).powi(2);
        if i < r {
            let x2 = x * x;
            let aligned = ((x2 * x2 - beta * sigma.powi(4)).max(0.0) / x2).sqrt();
            let gap = (x2 + sigma * sigma).sqrt() - aligned;
            total += gap * gap
                + beta * sigma * sigma * (u2 * (1.0 + beta) + 2.0 * beta)
                    / (u2 * u2 + beta * u2);
        } else {
            total += sigma * sigma * (u2 * u2 - beta) / (u2 + beta);
        }
    }
    total += r.saturating_sub(t) as f64 * (params.bulk_edge() * params.bulk_edge());
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(beta: f64, sigma: f64) -> SpikeParams {
        SpikeParams::new(beta, sigma).unwrap()
    }

    #[test]
    fn bulk_edge_values() {
        assert_abs_diff_eq!(params(1.0, 1.0).bulk_edge(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(params(0.25, 2.0).bulk_edge(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(params(4.0, 1.0).bulk_edge(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn observed_from_signal_values() {
        let p = params(1.0, 1.0);
        assert_abs_diff_eq!(p.observed_from_signal(2.0).unwrap(), 2.5, epsilon = 1e-14);
        // boundary input returns the continuous limit, the bulk edge
        assert_abs_diff_eq!(
            p.observed_from_signal(p.detection_point()).unwrap(),
            p.bulk_edge(),
            epsilon = 1e-12
        );
        assert!(p.observed_from_signal(0.9).is_err());

        let p = params(0.25, 1.0);
        assert_abs_diff_eq!(
            p.observed_from_signal(1.0).unwrap(),
            2.5f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn limit_cosine_values() {
        let p = params(1.0, 1.0);
        assert_abs_diff_eq!(
            p.limit_cosine(p.detection_point()).unwrap(),
            0.0,
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            p.limit_cosine(2.0).unwrap(),
            0.75f64.sqrt(),
            epsilon = 1e-14
        );
        assert!((p.limit_cosine(100.0).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn signal_from_observed_values() {
        let p = params(1.0, 1.0);
        assert_abs_diff_eq!(
            p.signal_from_observed(p.bulk_edge()).unwrap(),
            p.detection_point(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(p.signal_from_observed(2.5).unwrap(), 2.0, epsilon = 1e-13);
        assert!(p.signal_from_observed(1.9).is_err());

        let p = params(0.25, 1.0);
        assert!((p.signal_from_observed(1.58114).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn optimal_shrinker_values() {
        let p = params(1.0, 1.0);
        assert_eq!(p.optimal_shrinker(2.0), 0.0);
        assert_abs_diff_eq!(p.optimal_shrinker(2.5), 3.0f64.sqrt(), epsilon = 1e-13);

        let p = params(0.25, 1.0);
        assert_abs_diff_eq!(
            p.optimal_shrinker(2.5f64.sqrt()),
            0.6f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn optimal_hard_threshold_against_published_values() {
        assert!((params(1.0, 1.0).optimal_hard_threshold() - 2.149).abs() <= 0.001);
        assert!((params(0.05, 1.0).optimal_hard_threshold() - 1.301).abs() <= 0.001);
        assert!((params(0.5, 2.0).optimal_hard_threshold() - 3.632).abs() <= 0.002);
    }

    #[test]
    fn optimal_embedding_dim_counts() {
        let p = params(1.0, 1.0);
        assert_eq!(optimal_embedding_dim(&[9.0, 1.0, 0.5], &p), 1);
        assert_eq!(optimal_embedding_dim(&[0.0, 0.0], &p), 0);
        let tiny = params(1.0, 1e-12);
        assert_eq!(optimal_embedding_dim(&[9.0, 1.0, 0.5], &tiny), 3);
    }

    #[test]
    fn mds_loss_examples() {
        let p = params(1.0, 1.0);
        let one = SignalSpectrum::new(vec![2.0]).unwrap();
        // closed form: 10.25 - 5 sqrt(3)
        let expected = 10.25 - 5.0 * 3.0f64.sqrt();
        assert_abs_diff_eq!(mds_asymptotic_loss(&one, 1, &p), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(mds_asymptotic_loss(&one, 0, &p), 4.0, epsilon = 1e-12);

        let weak = SignalSpectrum::new(vec![0.5]).unwrap();
        assert_abs_diff_eq!(mds_asymptotic_loss(&weak, 1, &p), 4.25, epsilon = 1e-12);
    }

    #[test]
    fn mdsplus_loss_examples() {
        let p = params(1.0, 1.0);
        let one = SignalSpectrum::new(vec![2.0]).unwrap();
        assert_abs_diff_eq!(mdsplus_asymptotic_loss(&one, &p), 1.0, epsilon = 1e-12);
        let weak = SignalSpectrum::new(vec![0.5]).unwrap();
        assert_abs_diff_eq!(mdsplus_asymptotic_loss(&weak, &p), 0.25, epsilon = 1e-12);
        let two = SignalSpectrum::new(vec![2.0, 0.5]).unwrap();
        assert_abs_diff_eq!(mdsplus_asymptotic_loss(&two, &p), 1.25, epsilon = 1e-12);
    }

    #[test]
    fn regret_examples() {
        let p = params(1.0, 1.0);
        let one = SignalSpectrum::new(vec![2.0]).unwrap();
        let expected = 10.25 - 5.0 * 3.0f64.sqrt() - 1.0;
        assert_abs_diff_eq!(regret(&one, 1, &p), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(regret(&one, 0, &p), 3.0, epsilon = 1e-12);
        let weak = SignalSpectrum::new(vec![0.5]).unwrap();
        assert_abs_diff_eq!(regret(&weak, 1, &p), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_identity_on_grid() {
        for &beta in &[0.1, 0.5, 1.0, 2.0] {
            let p = params(beta, 1.0);
            for &mult in &[1.01, 1.5, 2.0, 5.0, 20.0] {
                let x = mult * p.detection_point();
                let y = p.observed_from_signal(x).unwrap();
                let back = p.signal_from_observed(y).unwrap();
                assert!(
                    (back - x).abs() <= 1e-10 * x,
                    "beta={beta} x={x}: roundtrip {back}"
                );
            }
        }
    }

    #[test]
    fn threshold_dominates_bulk_edge() {
        let mut betas: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
        betas.extend([2.0, 4.0]);
        for beta in betas {
            let p = params(beta, 1.0);
            assert!(
                p.optimal_hard_threshold() > p.bulk_edge(),
                "beta = {beta}"
            );
        }
    }

    #[test]
    fn cubic_root_certificate() {
        for i in 1..=40 {
            let beta = i as f64 * 0.1;
            let a = threshold_cubic_root(beta);
            let f = threshold_cubic(a, beta);
            assert!(
                f.abs() <= 1e-9 * (1.0 + beta).powi(3),
                "beta = {beta}: |f(a)| = {:e}",
                f.abs()
            );
        }
    }

    #[test]
    fn regret_nonnegative_on_grid() {
        for i in 0..20 {
            let x = 0.2 + 0.25 * i as f64;
            for j in 0..20 {
                let beta = 0.05 + 0.2 * j as f64;
                let p = params(beta, 1.0);
                let spec = SignalSpectrum::new(vec![x]).unwrap();
                for r in 0..3 {
                    let reg = regret(&spec, r, &p);
                    assert!(reg >= -1e-12, "x={x} beta={beta} r={r}: regret {reg}");
                    let diff = mds_asymptotic_loss(&spec, r, &p)
                        - mdsplus_asymptotic_loss(&spec, &p);
                    assert!((reg - diff).abs() <= 1e-9, "x={x} beta={beta} r={r}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn shrinker_below_identity_and_monotone(
            beta in 0.01f64..4.0,
            sigma in 0.1f64..10.0,
            y1 in 0.0f64..100.0,
            y2 in 0.0f64..100.0,
        ) {
            let p = params(beta, sigma);
            let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
            let s_lo = p.optimal_shrinker(lo);
            let s_hi = p.optimal_shrinker(hi);
            prop_assert!(s_lo <= lo + 1e-12);
            prop_assert!(s_hi <= hi + 1e-12);
            prop_assert!(s_lo <= s_hi + 1e-12);
        }

        #[test]
        fn shrinker_vanishes_continuously_at_edge(
            beta in 0.01f64..4.0,
            sigma in 0.1f64..10.0,
            eps in 1e-9f64..1e-6,
        ) {
            let p = params(beta, sigma);
            prop_assert_eq!(p.optimal_shrinker(p.bulk_edge()), 0.0);
            let just_above = p.optimal_shrinker(p.bulk_edge() * (1.0 + eps));
            prop_assert!(just_above < 0.2 * sigma, "jump of {just_above} at the edge");
        }

        #[test]
        fn threshold_scales_linearly_in_sigma(
            beta in 0.01f64..4.0,
            sigma in 0.01f64..100.0,
            scale in 0.01f64..100.0,
        ) {
            let base = params(beta, sigma).optimal_hard_threshold();
            let scaled = params(beta, scale * sigma).optimal_hard_threshold();
            prop_assert!((scaled - scale * base).abs() <= 1e-12 * scaled.abs());
        }

        #[test]
        fn regret_equals_loss_difference_multi_spike(
            x1 in 0.3f64..6.0,
            gap in 0.1f64..2.0,
            beta in 0.05f64..2.0,
            sigma in 0.2f64..3.0,
            r in 0usize..4,
        ) {
            let p = params(beta, sigma);
            let spec = SignalSpectrum::new(vec![x1 + gap, x1]).unwrap();
            let reg = regret(&spec, r, &p);
            let diff = mds_asymptotic_loss(&spec, r, &p) - mdsplus_asymptotic_loss(&spec, &p);
            prop_assert!(reg >= -1e-10);
            prop_assert!((reg - diff).abs() <= 1e-9 * (1.0 + diff.abs()));
        }
    }
}
