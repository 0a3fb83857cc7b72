//! Simulation-based Bayesian inference with a whitened, shrinkage-
//! regularized synthetic likelihood.
//!
//! The pipeline: simulate summary statistics from a model ([`models`]),
//! estimate a whitening transform at a central parameter value
//! ([`whitening`]), decorrelate every batch with it, shrink the resulting
//! covariance estimate toward its diagonal ([`synthlik`]), and run
//! Metropolis–Hastings against the resulting Gaussian likelihood estimate
//! ([`sampler`]). Fewer simulations per iteration then buy the same
//! log-likelihood variance, which is what makes the posterior usable.
//! [`diagnostics`] quantifies the quality of the approximation.
//!
//! All randomness flows through counter-derived [`stream::Stream`] handles,
//! making every result byte-identical across thread counts.

/// Re-exported so downstream crates can name the matrix types that appear
/// in public signatures (e.g. [`whiten_rows`]) without pinning their own
/// copy of the dependency to a matching version.
pub use nalgebra;

pub mod diagnostics;
pub mod fmt;
pub mod linalg;
pub mod models;
pub mod sampler;
pub mod stream;
pub mod synthlik;
pub mod whitening;

pub use linalg::SymmetricMatrix;
pub use models::{build_model, load_observed_csv, Model, ModelError, ModelSettings, Prior};
pub use sampler::{
    estimate_whitening_at, initial_mean_at, loglik_sd_at, run_chain, run_exact_chain, tune_gamma,
    tune_n, ChainOutput, ChainRecord, ProposalSpec, SamplerConfig, SamplerError, SdEstimate,
    TunedGamma, TunedN, WhiteningEstimate,
};
pub use stream::Stream;
pub use synthlik::{synthetic_loglik, ShrinkageSpec, SummaryMatrix, SyntheticLogLik};
pub use whitening::{compute_whitening, whiten_rows, WhiteningMatrix, WhiteningMethod};
