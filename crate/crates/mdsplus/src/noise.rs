//! Marcenko-Pastur and quarter-circle numerics plus the median-based noise
//! level estimator, covering both aspect-ratio regimes.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};

/// Marcenko-Pastur density with shape `beta` in (0, 1], unit noise scale.
///
/// Supported on `[(1 - sqrt(beta))^2, (1 + sqrt(beta))^2]`, zero outside.
pub fn mp_density(s: f64, beta: f64) -> f64 {
    assert!(
        beta > 0.0 && beta <= 1.0,
        "mp_density requires beta in (0, 1], got {beta}"
    );
    let (lo, hi) = mp_support(beta);
    if s <= lo || s >= hi {
        return 0.0;
    }
    ((hi - s) * (s - lo)).sqrt() / (2.0 * std::f64::consts::PI * beta * s)
}

fn mp_support(beta: f64) -> (f64, f64) {
    let rb = beta.sqrt();
    ((1.0 - rb) * (1.0 - rb), (1.0 + rb) * (1.0 + rb))
}

/// Density of noise-only singular values (the quarter-circle law) at noise
/// level `sigma`, supported on `[sigma (1 - sqrt(beta)), sigma (1 + sqrt(beta))]`.
pub fn quarter_circle_density(y: f64, beta: f64, sigma: f64) -> f64 {
    assert!(
        beta > 0.0 && beta <= 1.0,
        "quarter_circle_density requires beta in (0, 1], got {beta}"
    );
    assert!(sigma > 0.0, "sigma must be positive, got {sigma}");
    let rb = beta.sqrt();
    let lo = sigma * (1.0 - rb);
    let hi = sigma * (1.0 + rb);
    if y < lo || y > hi {
        return 0.0;
    }
    if y == 0.0 {
        // left endpoint of the beta = 1 support; continuous limit
        return 2.0 / (std::f64::consts::PI * sigma);
    }
    let a = hi * hi - y * y;
    let b = y * y - lo * lo;
    (a * b).max(0.0).sqrt() / (std::f64::consts::PI * beta * sigma * sigma * y)
}

/// Integrand of the MP law after the substitution `s = lo + u^2`, which
/// removes both the `1/sqrt(s)`-type blowup at a zero lower edge and the
/// square-root vanishing at the edge itself.
fn mp_integrand_left(u: f64, beta: f64, lo: f64, hi: f64) -> f64 {
    let span = (hi - lo - u * u).max(0.0);
    let ratio = if lo == 0.0 { 1.0 } else { u * u / (lo + u * u) };
    ratio * span.sqrt() / (std::f64::consts::PI * beta)
}

/// Integrand after `s = hi - v^2`, smooth at the upper edge.
fn mp_integrand_right(v: f64, beta: f64, lo: f64, hi: f64) -> f64 {
    let span = (hi - lo - v * v).max(0.0);
    v * v * span.sqrt() / (std::f64::consts::PI * beta * (hi - v * v))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
    if a >= b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

const QUAD_TOL: f64 = 1e-10;

/// CDF of the MP law with shape `beta` at `x`, by adaptive Simpson on the
/// edge-desingularized parametrization.
pub(crate) fn mp_cdf(x: f64, beta: f64) -> f64 {
    let (lo, hi) = mp_support(beta);
    if x <= lo {
        return 0.0;
    }
    let x = x.min(hi);
    let mid = 0.5 * (lo + hi);
    let left = |u: f64| mp_integrand_left(u, beta, lo, hi);
    if x <= mid {
        adaptive_simpson(&left, 0.0, (x - lo).sqrt(), QUAD_TOL)
    } else {
        let right = |v: f64| mp_integrand_right(v, beta, lo, hi);
        adaptive_simpson(&left, 0.0, (mid - lo).sqrt(), QUAD_TOL)
            + adaptive_simpson(&right, (hi - x).sqrt(), (hi - mid).sqrt(), QUAD_TOL)
    }
}

fn median_cache() -> &'static RwLock<HashMap<u64, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Median of the Marcenko-Pastur law with shape `beta` in (0, 1].
///
/// Solves `CDF(m) = 1/2` by bisection to within `1e-9`; results are memoized
/// keyed by `beta` rounded to `1e-12`.
pub fn mp_median(beta: f64) -> f64 {
    assert!(
        beta > 0.0 && beta <= 1.0,
        "mp_median requires beta in (0, 1], got {beta}"
    );
    let key = (beta * 1e12).round() as u64;
    if let Some(&hit) = median_cache().read().unwrap().get(&key) {
        return hit;
    }
    let (support_lo, support_hi) = mp_support(beta);
    let mut lo = support_lo;
    let mut hi = support_hi;
    for _ in 0..80 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mp_cdf(mid, beta) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let med = 0.5 * (lo + hi);
    median_cache().write().unwrap().insert(key, med);
    med
}

/// Noise-level estimate from the spectrum of the similarity matrix.
///
/// `s_eigenvalues` must hold at least the `min(n, p)` largest eigenvalues of
/// `S` (any order; they are sorted internally). With `beta = (n - 1) / p`,
/// returns `sqrt(s_med / mu_beta)` when `beta <= 1` and
/// `sqrt(s_med / (mu_{1/beta} * beta))` otherwise, where `s_med` is the
/// median of the `min(n, p)` largest values (mean of the central pair for
/// even length).
pub fn estimate_sigma(s_eigenvalues: &[f64], n: usize, p: usize) -> Result<f64> {
    if n < 8 {
        return Err(Error::TooFewSamples { n });
    }
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".to_string()));
    }
    let k = n.min(p);
    if s_eigenvalues.len() < k {
        return Err(Error::InvalidParameter(format!(
            "need the min(n, p) = {k} largest eigenvalues of S, got {}",
            s_eigenvalues.len()
        )));
    }
    if !s_eigenvalues.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(
            "eigenvalues must be finite".to_string(),
        ));
    }
    let mut vals = s_eigenvalues.to_vec();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals.truncate(k);
    let med = if k % 2 == 1 {
        vals[k / 2]
    } else {
        0.5 * (vals[k / 2 - 1] + vals[k / 2])
    };
    if med <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "median eigenvalue must be positive, got {med}"
        )));
    }
    let beta = (n - 1) as f64 / p as f64;
    let sigma_sq = if beta <= 1.0 {
        med / mp_median(beta)
    } else {
        med / (mp_median(1.0 / beta) * beta)
    };
    Ok(sigma_sq.sqrt())
}
