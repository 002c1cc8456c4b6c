//! Synthetic data generators for the spiked model and a helix, plus a
//! deterministic Monte-Carlo experiment runner comparing empirical embedding
//! losses against the closed-form asymptotics.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{center_rows, pairwise_sq_distances, svd, Matrix};
use crate::mds::{
    classical_from, mds_decompose, mds_plus_from, svht_from, Embedding, MdsDecomposition,
    SigmaSpec,
};
use crate::noise::estimate_sigma;
use crate::procrustes::align_raw;
use crate::spike::{
    mds_asymptotic_loss, mdsplus_asymptotic_loss, regret, SignalSpectrum, SpikeParams,
};

/// Configuration of one spiked-model dataset: `n` samples in ambient
/// dimension `p`, signal singular values `spectrum`, noise level `sigma`
/// (standard deviation `sigma / sqrt(p)` per coordinate).
#[derive(Debug, Clone)]
pub struct SpikedConfig {
    pub n: usize,
    pub p: usize,
    pub spectrum: SignalSpectrum,
    pub sigma: f64,
    pub seed: u64,
}

impl SpikedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter("need n >= 2".to_string()));
        }
        if self.p == 0 {
            return Err(Error::InvalidParameter("need p >= 1".to_string()));
        }
        if self.spectrum.len() >= self.n {
            return Err(Error::InvalidParameter(format!(
                "signal rank d = {} must be below n = {}",
                self.spectrum.len(),
                self.n
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    StandardNormal.sample(rng)
}

/// Haar-style orthonormal columns: QR of a Gaussian matrix with the sign of
/// each diagonal of `R` fixed.
fn random_frame(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    assert!(cols <= rows);
    let g = DMatrix::from_fn(rows, cols, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Signal matrix with exactly the requested singular values, row-centered:
/// built from a random orthonormal frame orthogonal to the all-ones vector,
/// re-centered and re-scaled.
fn signal_matrix(rng: &mut impl Rng, n: usize, spectrum: &SignalSpectrum) -> Matrix {
    let d = spectrum.len();
    let mut g = DMatrix::from_fn(n, d, |_, _| gaussian(rng));
    for mut col in g.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
    let left = {
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for c in 0..d {
            if r[(c, c)] < 0.0 {
                q.column_mut(c).neg_mut();
            }
        }
        q
    };
    let right = random_frame(rng, d, d);
    let mut x0 = DMatrix::zeros(n, d);
    for (c, &s) in spectrum.values().iter().enumerate() {
        x0 += s * left.column(c) * right.column(c).transpose();
    }
    // re-center and pin the singular values exactly
    let x0 = center_rows(&Matrix::from_dmatrix_unchecked(x0));
    let dec = svd(&x0);
    let mut x = DMatrix::zeros(n, d);
    for (c, &s) in spectrum.values().iter().enumerate() {
        x += s * dec.u.column(c) * dec.v.column(c).transpose();
    }
    Matrix::from_dmatrix_unchecked(x)
}

fn spiked_with_rng(
    n: usize,
    p: usize,
    spectrum: &SignalSpectrum,
    sigma: f64,
    rng: &mut impl Rng,
) -> (Matrix, Matrix) {
    let d = spectrum.len();
    let x = signal_matrix(rng, n, spectrum);
    // the embedded signal only needs the first d rows of the ambient rotation
    let frame = random_frame(rng, p, d).transpose();
    let mut y = x.as_dmatrix() * frame;
    if sigma > 0.0 {
        let scale = sigma / (p as f64).sqrt();
        for v in y.iter_mut() {
            *v += scale * gaussian(rng);
        }
    }
    (x, Matrix::from_dmatrix_unchecked(y))
}

/// Draws one spiked dataset: the latent `n x d` signal (exact singular
/// values, row-centered) and its noisy `n x p` ambient embedding.
pub fn generate_spiked_dataset(config: &SpikedConfig) -> Result<(Matrix, Matrix)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(spiked_with_rng(
        config.n,
        config.p,
        &config.spectrum,
        config.sigma,
        &mut rng,
    ))
}

/// Configuration of the helix dataset: `n` points along a helix of the given
/// radius, pitch and number of turns, embedded in `p` dimensions.
#[derive(Debug, Clone)]
pub struct HelixConfig {
    pub n: usize,
    pub p: usize,
    pub radius: f64,
    pub pitch: f64,
    pub turns: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Embed via a random rotation; with `false` the helix occupies the
    /// first three ambient coordinates unchanged.
    pub random_rotation: bool,
}

impl Default for HelixConfig {
    fn default() -> Self {
        Self {
            n: 300,
            p: 500,
            radius: 1.0,
            pitch: 0.2,
            turns: 3.0,
            sigma: 0.0,
            seed: 0,
            random_rotation: true,
        }
    }
}

/// Draws the helix dataset: row-centered `n x 3` coordinates and their noisy
/// `n x p` ambient embedding.
pub fn generate_helix(config: &HelixConfig) -> Result<(Matrix, Matrix)> {
    if config.p < 3 {
        return Err(Error::InvalidParameter(format!(
            "helix needs p >= 3, got {}",
            config.p
        )));
    }
    if config.n < 2 {
        return Err(Error::InvalidParameter("helix needs n >= 2".to_string()));
    }
    if !(config.sigma.is_finite() && config.sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be nonnegative, got {}",
            config.sigma
        )));
    }
    let n = config.n;
    let span = 2.0 * std::f64::consts::PI * config.turns;
    let raw = Matrix::from_fn(n, 3, |i, j| {
        let t = span * i as f64 / (n - 1) as f64;
        match j {
            0 => config.radius * t.cos(),
            1 => config.radius * t.sin(),
            _ => config.pitch * t,
        }
    })?;
    let x = center_rows(&raw);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y = if config.random_rotation {
        let frame = random_frame(&mut rng, config.p, 3).transpose();
        x.as_dmatrix() * frame
    } else {
        let mut wide = DMatrix::zeros(n, config.p);
        wide.view_mut((0, 0), (n, 3)).copy_from(x.as_dmatrix());
        wide
    };
    if config.sigma > 0.0 {
        let scale = config.sigma / (config.p as f64).sqrt();
        for v in y.iter_mut() {
            *v += scale * gaussian(&mut rng);
        }
    }
    Ok((x, Matrix::from_dmatrix_unchecked(y)))
}

/// Estimators the experiment runner can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Classical,
    Svht,
    MdsPlus,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Svht => "svht",
            Method::MdsPlus => "mds_plus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Method::Classical),
            "svht" => Ok(Method::Svht),
            "mds_plus" | "mds-plus" | "optimal" => Ok(Method::MdsPlus),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected classical, svht or mds_plus)"
            ))),
        }
    }
}

/// What to run per trial and how.
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Embedding dimension used by the classical method.
    pub r_for_mds: usize,
    /// Noise level handed to SVHT and MDS+: the true one or the per-trial
    /// estimate.
    pub estimator_sigma: SigmaSpec,
    /// Worker threads; results are identical at any count.
    pub threads: usize,
}

impl ExperimentOptions {
    pub fn new(trials: usize, methods: Vec<Method>, r_for_mds: usize, sigma: SigmaSpec) -> Self {
        Self {
            trials,
            methods,
            r_for_mds,
            estimator_sigma: sigma,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub n: usize,
    pub p: usize,
    pub signal: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
    pub trials: usize,
    pub methods: Vec<String>,
    pub r_for_mds: usize,
    pub estimator_sigma: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub empirical_loss_mds: Option<f64>,
    pub empirical_loss_svht: Option<f64>,
    pub empirical_loss_mdsplus: Option<f64>,
    /// Data-driven embedding dimension (MDS+ when run, else SVHT).
    pub rhat: Option<usize>,
    pub sigma_hat: Option<f64>,
    pub top_singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodStats {
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub mds: Option<MethodStats>,
    pub svht: Option<MethodStats>,
    pub mds_plus: Option<MethodStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryBlock {
    pub mds_asymptotic_loss: f64,
    pub mdsplus_asymptotic_loss: f64,
    pub regret: f64,
    pub lambda_star: f64,
    pub bulk_edge: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Aggregates,
    pub theory: TheoryBlock,
}

/// Squared similarity distance of an embedding (possibly empty) from the
/// latent signal.
pub fn embedding_loss_vs(embedding: &Embedding, x: &Matrix) -> Result<f64> {
    let pair = align_raw(embedding.coords(), x.as_dmatrix())?;
    Ok(pair.distance * pair.distance)
}

fn stats(values: &[f64]) -> MethodStats {
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    let var = if k > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64
    } else {
        0.0
    };
    let std_dev = var.sqrt();
    MethodStats {
        mean,
        std_dev,
        std_err: std_dev / (k as f64).sqrt(),
    }
}

fn theory_block(config: &SpikedConfig, r_for_mds: usize) -> TheoryBlock {
    let spectrum = &config.spectrum;
    if config.sigma > 0.0 {
        let params = SpikeParams::from_shape(config.n, config.p, config.sigma)
            .expect("validated config");
        TheoryBlock {
            mds_asymptotic_loss: mds_asymptotic_loss(spectrum, r_for_mds, &params),
            mdsplus_asymptotic_loss: mdsplus_asymptotic_loss(spectrum, &params),
            regret: regret(spectrum, r_for_mds, &params),
            lambda_star: params.optimal_hard_threshold(),
            bulk_edge: params.bulk_edge(),
        }
    } else {
        // noiseless limits: every spike is detectable and recovered exactly
        let tail: f64 = spectrum.values()[r_for_mds.min(spectrum.len())..]
            .iter()
            .map(|x| x * x)
            .sum();
        TheoryBlock {
            mds_asymptotic_loss: tail,
            mdsplus_asymptotic_loss: 0.0,
            regret: tail,
            lambda_star: 0.0,
            bulk_edge: 0.0,
        }
    }
}

fn run_one_trial(
    config: &SpikedConfig,
    opts: &ExperimentOptions,
    trial: usize,
) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64 + 1);
    let (x, y) = spiked_with_rng(config.n, config.p, &config.spectrum, config.sigma, &mut rng);
    let delta = pairwise_sq_distances(&y);
    let dec: MdsDecomposition = mds_decompose(&delta);

    let k = config.n.min(config.p).min(dec.eigenvalues().len());
    let sigma_hat = if config.n >= 8 {
        estimate_sigma(&dec.eigenvalues()[..k], config.n, config.p).ok()
    } else {
        None
    };
    let sigma_est = match opts.estimator_sigma {
        SigmaSpec::Known(s) => Some(s),
        SigmaSpec::Auto => sigma_hat,
    };

    let mut record = TrialRecord {
        trial,
        empirical_loss_mds: None,
        empirical_loss_svht: None,
        empirical_loss_mdsplus: None,
        rhat: None,
        sigma_hat,
        top_singular_values: dec.singular_values().into_iter().take(10).collect(),
    };

    for method in &opts.methods {
        match method {
            Method::Classical => {
                let emb = classical_from(&dec, opts.r_for_mds);
                record.empirical_loss_mds = Some(embedding_loss_vs(&emb, &x)?);
            }
            Method::Svht => {
                let s = sigma_est.ok_or(Error::TooFewSamples { n: config.n })?;
                let params = SpikeParams::from_shape(config.n, config.p, s)?;
                let emb = svht_from(&dec, params.optimal_hard_threshold())?;
                record.empirical_loss_svht = Some(embedding_loss_vs(&emb, &x)?);
                if record.rhat.is_none() {
                    record.rhat = Some(emb.dim());
                }
            }
            Method::MdsPlus => {
                let s = sigma_est.ok_or(Error::TooFewSamples { n: config.n })?;
                let emb = mds_plus_from(&dec, config.p, SigmaSpec::Known(s))?;
                record.empirical_loss_mdsplus = Some(embedding_loss_vs(&emb, &x)?);
                record.rhat = Some(emb.dim());
            }
        }
    }
    Ok(record)
}

/// Runs the Monte-Carlo experiment: per trial, draw a dataset, embed with
/// each requested method and score it against the latent signal.
///
/// Deterministic in `(config, trials)`: every trial owns an independent RNG
/// stream derived from `(seed, trial index)` and records are assembled in
/// trial order, so reports are byte-identical at any thread count.
pub fn run_experiment(config: &SpikedConfig, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    config.validate()?;
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".to_string()));
    }
    if opts.methods.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one method".to_string(),
        ));
    }
    let needs_sigma = opts
        .methods
        .iter()
        .any(|m| matches!(m, Method::Svht | Method::MdsPlus));
    if needs_sigma {
        if let SigmaSpec::Known(s) = opts.estimator_sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParameter(
                    "svht and mds_plus need a positive sigma (or auto)".to_string(),
                ));
            }
        }
    }

    let records: Vec<TrialRecord> = if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..opts.trials)
                .into_par_iter()
                .map(|t| run_one_trial(config, opts, t))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        (0..opts.trials)
            .map(|t| run_one_trial(config, opts, t))
            .collect::<Result<Vec<_>>>()?
    };

    let collect = |pick: fn(&TrialRecord) -> Option<f64>| -> Option<MethodStats> {
        let vals: Vec<f64> = records.iter().filter_map(pick).collect();
        (!vals.is_empty()).then(|| stats(&vals))
    };
    let aggregates = Aggregates {
        mds: collect(|r| r.empirical_loss_mds),
        svht: collect(|r| r.empirical_loss_svht),
        mds_plus: collect(|r| r.empirical_loss_mdsplus),
    };

    Ok(ExperimentReport {
        config: ConfigEcho {
            n: config.n,
            p: config.p,
            signal: config.spectrum.values().to_vec(),
            sigma: config.sigma,
            seed: config.seed,
            trials: opts.trials,
            methods: opts.methods.iter().map(|m| m.as_str().to_string()).collect(),
            r_for_mds: opts.r_for_mds,
            estimator_sigma: match opts.estimator_sigma {
                SigmaSpec::Known(_) => "known".to_string(),
                SigmaSpec::Auto => "auto".to_string(),
            },
        },
        trials: records,
        aggregates,
        theory: theory_block(config, opts.r_for_mds),
    })
}
