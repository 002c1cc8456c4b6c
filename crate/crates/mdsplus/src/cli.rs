//! Command-line front end: embedding, noise estimation, theory queries and
//! Monte-Carlo simulation.
//!
//! Exit codes: 0 on success, 2 for malformed input data, 3 for invalid flag
//! combinations or domain errors. Results go to stdout or files; warnings go
//! to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::csv::{fmt_sig, read_matrix_path, write_matrix_path};
use crate::error::Error;
use crate::matrix::{pairwise_sq_distances, DistanceMatrix};
use crate::mds::{
    classical_from, mds_decompose, mds_plus_from, svht_from, Embedding, MdsDecomposition,
    SigmaSpec,
};
use crate::noise::estimate_sigma;
use crate::sim::{run_experiment, ExperimentOptions, Method, SpikedConfig};
use crate::spike::{
    mds_asymptotic_loss, mdsplus_asymptotic_loss, regret, SignalSpectrum, SpikeParams,
};

#[derive(Parser)]
#[command(
    name = "mdsplus",
    version,
    about = "Multidimensional scaling for noisy high-dimensional data",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed points (or a distance matrix) into a low dimension
    Embed(EmbedArgs),
    /// Estimate the noise level from a distance matrix
    EstimateSigma(EstimateSigmaArgs),
    /// Print the optimal hard threshold and the bulk edge
    Threshold(ThresholdArgs),
    /// Apply the optimal shrinker to observed singular values
    Shrink(ShrinkArgs),
    /// Monte-Carlo comparison of estimators on spiked data
    Simulate(SimulateArgs),
    /// Closed-form asymptotic losses and regret
    TheoryLoss(TheoryLossArgs),
}

#[derive(Args)]
struct EmbedArgs {
    /// Points CSV, one sample per row (mutually exclusive with --distances)
    #[arg(value_name = "POINTS_CSV")]
    points: Option<PathBuf>,

    /// Squared-distance matrix CSV instead of points
    #[arg(long, value_name = "CSV")]
    distances: Option<PathBuf>,

    /// Embedding method
    #[arg(long, value_parser = ["classical", "svht", "optimal"])]
    method: String,

    /// Embedding dimension (classical only)
    #[arg(long)]
    r: Option<usize>,

    /// Hard threshold on singular values (svht only)
    #[arg(long)]
    lambda: Option<f64>,

    /// Ambient dimension p; required with --distances
    #[arg(long, value_name = "P")]
    ambient_dim: Option<usize>,

    /// Noise level: a positive number or 'auto'
    #[arg(long, value_name = "SIGMA|auto")]
    sigma: Option<String>,

    /// Output CSV path; a JSON sidecar is written with extension .json
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateSigmaArgs {
    /// Squared-distance matrix CSV
    #[arg(long, value_name = "CSV")]
    distances: PathBuf,

    /// Ambient dimension p
    #[arg(long, value_name = "P")]
    ambient_dim: usize,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    beta: f64,

    #[arg(long)]
    sigma: f64,
}

#[derive(Args)]
struct ShrinkArgs {
    #[arg(long)]
    beta: f64,

    #[arg(long)]
    sigma: f64,

    /// Observed singular values, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Samples per trial
    #[arg(long)]
    n: usize,

    /// Ambient dimension
    #[arg(long)]
    p: usize,

    /// Signal singular values, comma separated, strictly descending
    #[arg(long, value_delimiter = ',', required = true)]
    signal: Vec<f64>,

    /// Noise level (0 for noiseless)
    #[arg(long)]
    sigma: f64,

    #[arg(long)]
    trials: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Methods to score: classical,svht,mds_plus (default: all three, or
    /// classical alone when sigma is 0)
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,

    /// Embedding dimension for the classical method (default: signal rank)
    #[arg(long)]
    r: Option<usize>,

    /// Report JSON path (default: stdout)
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,

    /// Worker threads; the report is identical at any count
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct TheoryLossArgs {
    /// Signal singular values, comma separated, strictly descending
    #[arg(long, value_delimiter = ',', required = true)]
    signal: Vec<f64>,

    #[arg(long)]
    beta: f64,

    #[arg(long)]
    sigma: f64,

    /// Embedding dimension of the classical method
    #[arg(long)]
    r: usize,
}

/// Failures mapped to process exit codes.
enum Failure {
    /// Malformed input data (exit 2).
    Input(String),
    /// Invalid flags or domain errors (exit 3).
    Usage(String),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }

    fn input(e: impl std::fmt::Display) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Parses argv and runs one subcommand, returning the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Like [`run`] but with explicit arguments (used by the CLI tests).
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = err.print();
                    0
                }
                _ => {
                    let _ = err.print();
                    3
                }
            };
        }
    };
    let result = match cli.command {
        Command::Embed(args) => cmd_embed(args),
        Command::EstimateSigma(args) => cmd_estimate_sigma(args),
        Command::Threshold(args) => cmd_threshold(args),
        Command::Shrink(args) => cmd_shrink(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::TheoryLoss(args) => cmd_theory_loss(args),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    }
}

fn load_distances(path: &Path) -> Result<DistanceMatrix, Failure> {
    let m = read_matrix_path(path).map_err(Failure::input)?;
    DistanceMatrix::from_matrix(m).map_err(Failure::input)
}

fn parse_sigma_spec(raw: &str) -> Result<SigmaSpec, Failure> {
    if raw == "auto" {
        return Ok(SigmaSpec::Auto);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| Failure::Usage(format!("--sigma must be a number or 'auto', got '{raw}'")))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Failure::Usage(format!("--sigma must be positive, got {v}")));
    }
    Ok(SigmaSpec::Known(v))
}

/// Resolves an explicit or estimated noise level against a decomposition.
fn resolve_sigma(
    spec: SigmaSpec,
    dec: &MdsDecomposition,
    n: usize,
    p: usize,
) -> Result<f64, Failure> {
    match spec {
        SigmaSpec::Known(s) => Ok(s),
        SigmaSpec::Auto => {
            let k = n.min(p).min(dec.eigenvalues().len());
            estimate_sigma(&dec.eigenvalues()[..k], n, p).map_err(Failure::usage)
        }
    }
}

fn cmd_embed(args: EmbedArgs) -> Result<(), Failure> {
    let (delta, p) = match (&args.points, &args.distances) {
        (Some(points_path), None) => {
            if args.ambient_dim.is_some() {
                return Err(Failure::Usage(
                    "--ambient-dim is only valid with --distances (points carry their own dimension)"
                        .to_string(),
                ));
            }
            let pts = read_matrix_path(points_path).map_err(Failure::input)?;
            let p = pts.ncols();
            (pairwise_sq_distances(&pts), p)
        }
        (None, Some(dist_path)) => {
            let p = args.ambient_dim.ok_or_else(|| {
                Failure::Usage("--ambient-dim is required with --distances".to_string())
            })?;
            if p == 0 {
                return Err(Failure::Usage("--ambient-dim must be at least 1".to_string()));
            }
            (load_distances(dist_path)?, p)
        }
        (Some(_), Some(_)) => {
            return Err(Failure::Usage(
                "supply either a points CSV or --distances, not both".to_string(),
            ))
        }
        (None, None) => {
            return Err(Failure::Usage(
                "supply a points CSV or --distances".to_string(),
            ))
        }
    };
    let n = delta.n();
    if n < 2 {
        return Err(Failure::Input(format!(
            "need at least 2 points to embed, got {n}"
        )));
    }
    let sigma_spec = args.sigma.as_deref().map(parse_sigma_spec).transpose()?;

    let dec = mds_decompose(&delta);
    let embedding = match args.method.as_str() {
        "classical" => {
            let r = args.r.ok_or_else(|| {
                Failure::Usage("--method classical requires --r".to_string())
            })?;
            if args.lambda.is_some() || sigma_spec.is_some() {
                return Err(Failure::Usage(
                    "--lambda and --sigma do not apply to --method classical".to_string(),
                ));
            }
            classical_from(&dec, r)
        }
        "svht" => {
            if args.r.is_some() {
                return Err(Failure::Usage(
                    "--r does not apply to --method svht (use --lambda or --sigma)".to_string(),
                ));
            }
            let lambda = match (args.lambda, sigma_spec) {
                (Some(l), None) => l,
                (None, Some(spec)) => {
                    let sigma = resolve_sigma(spec, &dec, n, p)?;
                    let params = SpikeParams::from_shape(n, p, sigma).map_err(Failure::usage)?;
                    params.optimal_hard_threshold()
                }
                (Some(_), Some(_)) => {
                    return Err(Failure::Usage(
                        "--method svht takes --lambda or --sigma, not both".to_string(),
                    ))
                }
                (None, None) => {
                    return Err(Failure::Usage(
                        "--method svht requires --lambda or --sigma".to_string(),
                    ))
                }
            };
            svht_from(&dec, lambda).map_err(Failure::usage)?
        }
        "optimal" => {
            if args.r.is_some() || args.lambda.is_some() {
                return Err(Failure::Usage(
                    "--r and --lambda do not apply to --method optimal".to_string(),
                ));
            }
            let spec = sigma_spec.ok_or_else(|| {
                Failure::Usage("--method optimal requires --sigma (a value or 'auto')".to_string())
            })?;
            mds_plus_from(&dec, p, spec).map_err(Failure::usage)?
        }
        other => return Err(Failure::Usage(format!("unknown method '{other}'"))),
    };

    if let Some(note) = embedding.note() {
        eprintln!("warning: {note}");
    }
    write_embedding(&args.out, &embedding, n, p).map_err(Failure::input)?;
    Ok(())
}

fn write_embedding(out: &Path, emb: &Embedding, n: usize, p: usize) -> crate::Result<()> {
    let header = format!("embedding method={} r={}", emb.method(), emb.dim());
    match emb.to_matrix() {
        Some(m) => write_matrix_path(out, &m, Some(&header))?,
        None => {
            // empty embedding: header plus one blank line per point
            let mut f = std::io::BufWriter::new(std::fs::File::create(out)?);
            writeln!(f, "# {header}")?;
            for _ in 0..n {
                writeln!(f)?;
            }
        }
    }
    let beta = (n as f64 - 1.0) / p as f64;
    let sidecar = serde_json::json!({
        "method": emb.method().as_str(),
        "r": emb.dim(),
        "axis_values": emb.axis_values(),
        "clipped_count": emb.clipped_count(),
        "sigma_used": emb.sigma_used(),
        "beta": emb.beta().unwrap_or(beta),
    });
    let json_path = out.with_extension("json");
    let mut f = std::fs::File::create(json_path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn cmd_estimate_sigma(args: EstimateSigmaArgs) -> Result<(), Failure> {
    if args.ambient_dim == 0 {
        return Err(Failure::Usage("--ambient-dim must be at least 1".to_string()));
    }
    let delta = load_distances(&args.distances)?;
    let n = delta.n();
    let p = args.ambient_dim;
    let dec = mds_decompose(&delta);
    let k = n.min(p).min(dec.eigenvalues().len());
    let sigma_hat = estimate_sigma(&dec.eigenvalues()[..k], n, p).map_err(Failure::usage)?;
    let beta = (n as f64 - 1.0) / p as f64;
    println!("sigma_hat = {}", fmt_sig(sigma_hat, 12));
    println!("beta = {}", fmt_sig(beta, 12));
    Ok(())
}

fn cmd_threshold(args: ThresholdArgs) -> Result<(), Failure> {
    let params = SpikeParams::new(args.beta, args.sigma).map_err(Failure::usage)?;
    println!("lambda_star = {}", fmt_sig(params.optimal_hard_threshold(), 12));
    println!("bulk_edge = {}", fmt_sig(params.bulk_edge(), 12));
    Ok(())
}

fn cmd_shrink(args: ShrinkArgs) -> Result<(), Failure> {
    let params = SpikeParams::new(args.beta, args.sigma).map_err(Failure::usage)?;
    if let Some(bad) = args.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Failure::Usage(format!(
            "--values must be nonnegative, got {bad}"
        )));
    }
    for &y in &args.values {
        println!("{}", fmt_sig(params.optimal_shrinker(y), 12));
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let spectrum = SignalSpectrum::new(args.signal.clone()).map_err(Failure::usage)?;
    let methods: Vec<Method> = match &args.methods {
        Some(names) => names
            .iter()
            .map(|s| Method::parse(s))
            .collect::<crate::Result<_>>()
            .map_err(Failure::usage)?,
        None if args.sigma == 0.0 => vec![Method::Classical],
        None => vec![Method::Classical, Method::Svht, Method::MdsPlus],
    };
    if args.sigma == 0.0
        && methods
            .iter()
            .any(|m| matches!(m, Method::Svht | Method::MdsPlus))
    {
        return Err(Failure::Usage(
            "svht and mds_plus need --sigma > 0".to_string(),
        ));
    }
    let r_for_mds = args.r.unwrap_or(spectrum.len());
    let config = SpikedConfig {
        n: args.n,
        p: args.p,
        spectrum,
        sigma: args.sigma,
        seed: args.seed,
    };
    config.validate().map_err(Failure::usage)?;
    let mut opts = ExperimentOptions::new(
        args.trials,
        methods,
        r_for_mds,
        SigmaSpec::Known(if args.sigma > 0.0 { args.sigma } else { 1.0 }),
    );
    opts.threads = args.threads.max(1);
    let report = run_experiment(&config, &opts).map_err(Failure::usage)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    match &args.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| Failure::input(Error::Io(e)))?;
            writeln!(f, "{json}").map_err(|e| Failure::input(Error::Io(e)))?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_theory_loss(args: TheoryLossArgs) -> Result<(), Failure> {
    let params = SpikeParams::new(args.beta, args.sigma).map_err(Failure::usage)?;
    let spectrum = SignalSpectrum::new(args.signal.clone()).map_err(Failure::usage)?;
    let mds = mds_asymptotic_loss(&spectrum, args.r, &params);
    let plus = mdsplus_asymptotic_loss(&spectrum, &params);
    let reg = regret(&spectrum, args.r, &params);
    println!("mds_loss = {}", fmt_sig(mds, 12));
    println!("mdsplus_loss = {}", fmt_sig(plus, 12));
    println!("regret = {}", fmt_sig(reg, 12));
    Ok(())
}
