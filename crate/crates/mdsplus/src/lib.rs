//! Multidimensional scaling for noisy high-dimensional data.
//!
//! High-dimensional ambient noise shifts the spectrum of the MDS similarity
//! matrix and rotates its eigenvectors, so classical MDS degrades and then
//! breaks down sharply once a signal singular value falls below
//! `sigma * beta^(1/4)`. This crate implements the classical algorithm
//! together with the estimators that correct for the noise:
//!
//! - [`mds::classical_mds`] — double centering plus truncated
//!   eigendecomposition,
//! - [`mds::svht_embed`] — hard thresholding of the observed singular
//!   values, with the loss-optimal threshold available from
//!   [`spike::SpikeParams::optimal_hard_threshold`],
//! - [`mds::mds_plus`] — the optimal-shrinkage variant: it picks the
//!   embedding dimension itself (eigenvalues above the bulk edge) and shrinks
//!   each retained axis by the unique loss-optimal nonlinearity,
//! - [`noise::estimate_sigma`] — a median-based, consistent noise-level
//!   estimator for both aspect-ratio regimes,
//! - [`procrustes::embedding_loss`] — the rotation/translation/padding
//!   invariant loss that scores every embedding,
//! - [`spike`] — closed-form asymptotics (spike location and cosine maps,
//!   asymptotic losses, regret),
//! - [`sim`] — deterministic Monte-Carlo harness checking empirics against
//!   the closed forms.
//!
//! The `mdsplus` binary exposes the same functionality as subcommands
//! (`embed`, `estimate-sigma`, `threshold`, `shrink`, `simulate`,
//! `theory-loss`); the `examples/` directory has one runnable example per
//! capability.

pub mod cli;
pub mod csv;
pub mod error;
pub mod matrix;
pub mod mds;
pub mod noise;
pub mod procrustes;
pub mod sim;
pub mod spike;

pub use error::{Error, Result};
pub use matrix::{
    center_rows, pairwise_sq_distances, svd, sym_eig, DistanceMatrix, Matrix, SimilarityMatrix,
    SpectralDecomposition,
};
pub use mds::{
    classical_mds, mds_decompose, mds_plus, shrinkage_embed, similarity_from_distances,
    svht_embed, Embedding, EmbeddingMethod, MdsDecomposition, SigmaSpec,
};
pub use noise::{estimate_sigma, mp_density, mp_median, quarter_circle_density};
pub use procrustes::{embedding_loss, similarity_distance, AlignedPair};
pub use sim::{
    generate_helix, generate_spiked_dataset, run_experiment, ExperimentOptions, ExperimentReport,
    HelixConfig, Method, SpikedConfig,
};
pub use spike::{
    mds_asymptotic_loss, mdsplus_asymptotic_loss, optimal_embedding_dim, regret, SignalSpectrum,
    SpikeParams,
};

// Re-exported so downstream code can name the coordinate type.
pub use nalgebra;
