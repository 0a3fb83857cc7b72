//! Metropolis–Hastings sampling against the (whitened, shrunk) synthetic
//! likelihood, plus the tuning protocol for the number of simulations and
//! the shrinkage level.
//!
//! # Random-stream discipline
//!
//! All randomness derives from counter-based [`Stream`] handles, never from
//! shared mutable generator state. A chain with master seed `s` uses
//! `Stream::root(s).child(t)` for iteration `t` (`t = 0` is
//! initialization), with fixed child indices below it: 0 for the proposal
//! draw, 1 for the acceptance uniform, and 2 as the parent of the
//! simulation block, where simulation `i`, attempt `a` draws from
//! `.child(2).child(i).child(a)`. Every simulation therefore has its own
//! substream determined only by its indices, so results are byte-identical
//! for any degree of simulation concurrency.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{spectral_decompose, LinalgError, SymmetricMatrix};
use crate::models::{Model, ModelError};
use crate::stream::Stream;
use crate::synthlik::{
    gaussian_loglik, sample_moments, synthetic_loglik, ShrinkageSpec, SummaryMatrix,
    SynthLikError,
};
use crate::whitening::{whiten_rows, WhiteningError, WhiteningMatrix, WhiteningMethod};

/// Child index of the proposal draw within an iteration's stream.
const CHILD_PROPOSAL: u64 = 0;
/// Child index of the acceptance uniform within an iteration's stream.
const CHILD_ACCEPT: u64 = 1;
/// Child index of the simulation block within an iteration's stream.
const CHILD_SIMS: u64 = 2;
/// Simulation attempts per index before the batch is declared failed.
const MAX_SIM_ATTEMPTS: u64 = 3;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("initial state has unusable synthetic log-likelihood: {0}")]
    BadInitialState(String),
    #[error("proposal covariance is not positive semidefinite")]
    ProposalNotPsd,
    #[error("{failed} of {total} covariance-estimation simulations failed, exceeding the {budget} allowed")]
    SimulationBudgetExceeded { failed: usize, total: usize, budget: usize },
    #[error("log-likelihood estimate is degenerate at these settings: {0}")]
    DegenerateLikelihood(String),
    #[error("tuning exceeded the simulation cap of {cap} (last standard deviation {last_sd})")]
    TuningCapExceeded { cap: usize, last_sd: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    SynthLik(#[from] SynthLikError),
    #[error(transparent)]
    Whitening(#[from] WhiteningError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Gaussian random-walk proposal. The covariance may be positive
/// *semi*definite (a zero matrix yields a point proposal, useful in tests);
/// indefinite matrices are rejected.
#[derive(Clone, Debug)]
pub struct ProposalSpec {
    cov: SymmetricMatrix,
    factor: SymmetricMatrix,
}

impl ProposalSpec {
    pub fn gaussian(cov: SymmetricMatrix) -> Result<Self, SamplerError> {
        let dec = spectral_decompose(&cov)?;
        let max_abs = dec.eigenvalues().iter().fold(0.0f64, |a, l| a.max(l.abs()));
        let tol = 1e-10 * max_abs;
        if dec.eigenvalues().iter().any(|&l| l < -tol) {
            return Err(SamplerError::ProposalNotPsd);
        }
        let factor = dec.map_eigenvalues(|l| l.max(0.0).sqrt());
        Ok(ProposalSpec { cov, factor })
    }

    /// Independent diagonal random walk with the given standard deviations.
    pub fn diagonal(sds: &[f64]) -> Result<Self, SamplerError> {
        let vars: Vec<f64> = sds.iter().map(|s| s * s).collect();
        Self::gaussian(SymmetricMatrix::from_diagonal(&vars)?)
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn covariance(&self) -> &SymmetricMatrix {
        &self.cov
    }

    fn propose(&self, current: &[f64], stream: Stream) -> Vec<f64> {
        let mut rng = stream.rng();
        let z: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let step = crate::linalg::mat_vec(self.factor.matrix(), &z);
        current.iter().zip(&step).map(|(c, s)| c + s).collect()
    }

    /// Log-density of proposing `to` from `from` (up to the normalizing
    /// constant), used only by tests verifying that the symmetric terms
    /// cancel in the acceptance ratio.
    pub fn log_density_shift(&self, from: &[f64], to: &[f64]) -> f64 {
        let diff: Vec<f64> = to.iter().zip(from).map(|(t, f)| t - f).collect();
        let dec = spectral_decompose(&self.cov).expect("proposal covariance decomposes");
        let pinv = dec.map_eigenvalues(|l| if l > 0.0 { 1.0 / l } else { 0.0 });
        let q = crate::linalg::mat_vec(pinv.matrix(), &diff);
        -0.5 * diff.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Settings for one synthetic-likelihood chain.
#[derive(Clone, Debug)]
pub struct SamplerConfig {
    /// Number of Metropolis–Hastings steps; the chain emits this many
    /// records plus the initial state.
    pub iterations: usize,
    /// Iterations to treat as warm-up during analysis. Recorded for
    /// downstream tooling; the chain itself keeps every record.
    pub burn_in: usize,
    /// Simulations per likelihood estimate.
    pub n_draws: usize,
    pub shrinkage: ShrinkageSpec,
    /// Transformation applied to summaries before moment estimation; when
    /// absent, shrinkage acts on the raw summary covariance.
    pub whitening: Option<WhiteningMatrix>,
    /// Mean for the initial state's `N(mean, I)` likelihood (in whitened
    /// space when `whitening` is present), typically the covariance-
    /// estimation batch mean. When absent, the initial likelihood is
    /// estimated from a fresh batch at `theta0` like any proposal.
    pub initial_mean: Option<Vec<f64>>,
    pub theta0: Vec<f64>,
    pub seed: u64,
}

impl SamplerConfig {
    fn validate(&self, model: &dyn Model) -> Result<(), SamplerError> {
        if self.iterations == 0 {
            return Err(SamplerError::Config("iterations must be at least 1".to_string()));
        }
        if self.n_draws < 2 {
            return Err(SamplerError::Config(format!(
                "need at least 2 simulations per estimate, got {}",
                self.n_draws
            )));
        }
        self.shrinkage.validate().map_err(|e| SamplerError::Config(e.to_string()))?;
        if self.theta0.len() != model.param_count() {
            return Err(SamplerError::Config(format!(
                "theta0 has length {}, model has {} parameters",
                self.theta0.len(),
                model.param_count()
            )));
        }
        if !model.prior().contains(&self.theta0) {
            return Err(SamplerError::Config(format!(
                "theta0 {:?} is outside the prior support",
                self.theta0
            )));
        }
        let d = model.summary_dim();
        if let Some(w) = &self.whitening {
            if w.dim() != d {
                return Err(SamplerError::Config(format!(
                    "whitening matrix dimension {} does not match summary dimension {d}",
                    w.dim()
                )));
            }
        }
        if let Some(m) = &self.initial_mean {
            if m.len() != d {
                return Err(SamplerError::Config(format!(
                    "initial mean has length {}, summary dimension is {d}",
                    m.len()
                )));
            }
        }
        Ok(())
    }
}

/// One state of the chain. `iteration` 0 is the initial state; a record
/// with `accepted = false` repeats the previous state (and its retained
/// log-likelihood estimate, which is never recomputed).
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    /// `iterations + 1` records, the initial state first.
    pub records: Vec<ChainRecord>,
    /// Accepted moves divided by iterations.
    pub acceptance_rate: f64,
    /// Total simulator invocations, including retries. Proposals rejected
    /// on prior support contribute nothing.
    pub simulation_calls: u64,
}

/// A whitening matrix estimated at a parameter point, together with the
/// whitened mean of the estimation batch — the initial-state mean the
/// sampling algorithm prescribes.
#[derive(Clone, Debug)]
pub struct WhiteningEstimate {
    pub matrix: WhiteningMatrix,
    pub whitened_mean: Vec<f64>,
    /// Simulations that survived the retry budget and entered the estimate.
    pub n_used: usize,
}

/// Simulate `count` summary vectors at `theta`, one substream per
/// (index, attempt). `None` entries mark indices whose draws stayed
/// degenerate after all attempts.
fn simulate_rows(
    model: &dyn Model,
    theta: &[f64],
    count: usize,
    parent: Stream,
    calls: &AtomicU64,
) -> Result<Vec<Option<Vec<f64>>>, SamplerError> {
    let d = model.summary_dim();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let index_stream = parent.child(i as u64);
            for attempt in 0..MAX_SIM_ATTEMPTS {
                calls.fetch_add(1, Ordering::Relaxed);
                let mut rng = index_stream.child(attempt).rng();
                match model.simulate_summaries(theta, &mut rng) {
                    Ok(row) => {
                        if row.len() != d {
                            return Err(SamplerError::Config(format!(
                                "model returned a summary of length {}, expected {d}",
                                row.len()
                            )));
                        }
                        return Ok(Some(row));
                    }
                    Err(e) if e.is_retryable() => continue,
                    Err(e) => return Err(SamplerError::Model(e)),
                }
            }
            Ok(None)
        })
        .collect()
}

fn rows_to_matrix(rows: Vec<Vec<f64>>, d: usize) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, d, |i, j| rows[i][j])
}

/// Estimate a whitening matrix from `n_cov` simulations at `theta0`.
///
/// Indices that stay degenerate after the per-index retries are dropped;
/// more than 1% of them is an error. The returned estimate carries the
/// whitened batch mean, which the sampler uses as its initial-state mean.
pub fn estimate_whitening_at(
    model: &dyn Model,
    theta0: &[f64],
    n_cov: usize,
    method: WhiteningMethod,
    stream: Stream,
) -> Result<WhiteningEstimate, SamplerError> {
    let batch = covariance_batch(model, theta0, n_cov, stream)?;
    let moments = sample_moments(&batch);
    let mut matrix = crate::whitening::compute_whitening(&moments.cov, method)?;
    matrix.source_theta = Some(theta0.to_vec());
    matrix.n_cov = Some(batch.n_draws());
    let whitened_mean = matrix.whiten_vec(&moments.mean)?;
    Ok(WhiteningEstimate { matrix, whitened_mean, n_used: batch.n_draws() })
}

/// Mean of the same covariance-estimation batch without any whitening: the
/// initial-state mean for runs with no transformation. Given the same
/// stream, the batch is identical to [`estimate_whitening_at`]'s.
pub fn initial_mean_at(
    model: &dyn Model,
    theta0: &[f64],
    n_cov: usize,
    stream: Stream,
) -> Result<Vec<f64>, SamplerError> {
    let batch = covariance_batch(model, theta0, n_cov, stream)?;
    Ok(sample_moments(&batch).mean)
}

fn covariance_batch(
    model: &dyn Model,
    theta0: &[f64],
    n_cov: usize,
    stream: Stream,
) -> Result<SummaryMatrix, SamplerError> {
    if theta0.len() != model.param_count() || !model.prior().contains(theta0) {
        return Err(SamplerError::Config(format!(
            "covariance-estimation point {theta0:?} is outside the prior support"
        )));
    }
    let d = model.summary_dim();
    if n_cov < d + 1 {
        log::warn!(
            "covariance estimation uses {n_cov} simulations for {d} summaries; \
             the sample covariance will be singular"
        );
    }
    let calls = AtomicU64::new(0);
    let rows = simulate_rows(model, theta0, n_cov, stream.child(CHILD_SIMS), &calls)?;
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(n_cov);
    let mut failed = 0usize;
    for row in rows {
        match row {
            Some(r) => kept.push(r),
            None => failed += 1,
        }
    }
    let budget = n_cov / 100;
    if failed > budget {
        return Err(SamplerError::SimulationBudgetExceeded { failed, total: n_cov, budget });
    }
    if kept.len() < 2 {
        return Err(SamplerError::DegenerateLikelihood(
            "covariance estimation produced fewer than 2 usable simulations".to_string(),
        ));
    }
    Ok(SummaryMatrix::new(rows_to_matrix(kept, d))?)
}

enum BatchLoglik {
    Value(f64),
    /// The batch could not produce a usable estimate (exhausted retries,
    /// singular covariance, zero variance); the proposal is rejected.
    Degenerate,
}

/// Synthetic log-likelihood of one proposal batch, or `Degenerate` when the
/// batch fails (exhausted retries, non-PD covariance, zero variances).
fn proposal_loglik(
    model: &dyn Model,
    s_work: &[f64],
    theta: &[f64],
    config: &SamplerConfig,
    sims_parent: Stream,
    calls: &AtomicU64,
) -> Result<BatchLoglik, SamplerError> {
    let rows = simulate_rows(model, theta, config.n_draws, sims_parent, calls)?;
    let mut collected: Vec<Vec<f64>> = Vec::with_capacity(config.n_draws);
    for row in rows {
        match row {
            Some(r) => collected.push(r),
            None => return Ok(BatchLoglik::Degenerate),
        }
    }
    let raw = rows_to_matrix(collected, model.summary_dim());
    let working = match &config.whitening {
        Some(w) => whiten_rows(&raw, w)?,
        None => raw,
    };
    let batch = SummaryMatrix::new(working)?;
    match synthetic_loglik(s_work, &batch, &config.shrinkage) {
        Ok(est) => Ok(BatchLoglik::Value(est.value)),
        Err(e) if e.is_degenerate_estimate() => Ok(BatchLoglik::Degenerate),
        Err(e) => Err(SamplerError::SynthLik(e)),
    }
}

/// Run the synthetic-likelihood Metropolis–Hastings chain.
///
/// Per iteration: draw a Gaussian random-walk candidate; reject candidates
/// outside the prior support without simulating; otherwise estimate the
/// synthetic log-likelihood from a fresh batch of `n_draws` simulations
/// (whitened, then shrunk) and accept with the Metropolis ratio, in which
/// the symmetric proposal densities cancel. The current state's estimate
/// is retained, never recomputed.
pub fn run_chain(
    model: &dyn Model,
    s_obs: &[f64],
    config: &SamplerConfig,
    proposal: &ProposalSpec,
) -> Result<ChainOutput, SamplerError> {
    config.validate(model)?;
    if proposal.dim() != model.param_count() {
        return Err(SamplerError::Config(format!(
            "proposal dimension {} does not match parameter count {}",
            proposal.dim(),
            model.param_count()
        )));
    }
    if s_obs.len() != model.summary_dim() {
        return Err(SamplerError::Config(format!(
            "observed summary has length {}, model produces {}",
            s_obs.len(),
            model.summary_dim()
        )));
    }
    let root = Stream::root(config.seed);
    let calls = AtomicU64::new(0);
    let s_work: Vec<f64> = match &config.whitening {
        Some(w) => w.whiten_vec(s_obs)?,
        None => s_obs.to_vec(),
    };

    // Initial state: the prescribed N(batch mean, I) likelihood when the
    // caller provides the covariance-batch mean, otherwise a fresh batch at
    // theta0 under the run's own shrinkage settings.
    let initial_loglik = match &config.initial_mean {
        Some(mean) => {
            let identity = SymmetricMatrix::identity(model.summary_dim());
            gaussian_loglik(&s_work, mean, &identity)?
        }
        None => {
            match proposal_loglik(
                model,
                &s_work,
                &config.theta0,
                config,
                root.child(0).child(CHILD_SIMS),
                &calls,
            )? {
                BatchLoglik::Value(v) => v,
                BatchLoglik::Degenerate => {
                    return Err(SamplerError::BadInitialState(
                        "initial batch at theta0 is degenerate".to_string(),
                    ));
                }
            }
        }
    };
    if !initial_loglik.is_finite() {
        return Err(SamplerError::BadInitialState(format!(
            "log-likelihood at theta0 is {initial_loglik}"
        )));
    }

    let mut records = Vec::with_capacity(config.iterations + 1);
    records.push(ChainRecord {
        iteration: 0,
        theta: config.theta0.clone(),
        loglik: initial_loglik,
        accepted: false,
    });
    let mut theta = config.theta0.clone();
    let mut loglik = initial_loglik;
    let mut accepted_moves = 0usize;
    let prior = model.prior();

    for t in 1..=config.iterations {
        let iter_stream = root.child(t as u64);
        let candidate = proposal.propose(&theta, iter_stream.child(CHILD_PROPOSAL));
        let mut accept = false;
        let mut candidate_loglik = f64::NEG_INFINITY;
        if prior.contains(&candidate) {
            let batch = proposal_loglik(
                model,
                &s_work,
                &candidate,
                config,
                iter_stream.child(CHILD_SIMS),
                &calls,
            )?;
            if let BatchLoglik::Value(v) = batch {
                candidate_loglik = v;
                // Uniform priors contribute equal constants and the
                // symmetric proposal densities cancel exactly, leaving the
                // likelihood ratio.
                let log_ratio = candidate_loglik - loglik;
                let u: f64 = iter_stream.child(CHILD_ACCEPT).rng().random();
                accept = u.ln() < log_ratio;
            }
        }
        if accept {
            theta = candidate;
            loglik = candidate_loglik;
            accepted_moves += 1;
        }
        records.push(ChainRecord { iteration: t, theta: theta.clone(), loglik, accepted: accept });
    }

    Ok(ChainOutput {
        records,
        acceptance_rate: accepted_moves as f64 / config.iterations as f64,
        simulation_calls: calls.into_inner(),
    })
}

/// Metropolis–Hastings against a model's exact likelihood, with the same
/// stream layout as [`run_chain`] (the simulation substreams go unused).
pub fn run_exact_chain(
    model: &dyn Model,
    s_obs: &[f64],
    theta0: &[f64],
    iterations: usize,
    seed: u64,
    proposal: &ProposalSpec,
) -> Result<ChainOutput, SamplerError> {
    if !model.has_analytic_loglik() {
        return Err(SamplerError::Config(format!(
            "model {} has no analytic likelihood",
            model.name()
        )));
    }
    if iterations == 0 {
        return Err(SamplerError::Config("iterations must be at least 1".to_string()));
    }
    if theta0.len() != model.param_count() || !model.prior().contains(theta0) {
        return Err(SamplerError::Config(format!(
            "theta0 {theta0:?} is outside the prior support"
        )));
    }
    let root = Stream::root(seed);
    let mut theta = theta0.to_vec();
    let mut loglik = model.analytic_loglik(&theta, s_obs)?;
    if !loglik.is_finite() {
        return Err(SamplerError::BadInitialState(format!(
            "exact log-likelihood at theta0 is {loglik}"
        )));
    }
    let mut records = Vec::with_capacity(iterations + 1);
    records.push(ChainRecord { iteration: 0, theta: theta.clone(), loglik, accepted: false });
    let mut accepted_moves = 0usize;
    let prior = model.prior();
    for t in 1..=iterations {
        let iter_stream = root.child(t as u64);
        let candidate = proposal.propose(&theta, iter_stream.child(CHILD_PROPOSAL));
        let mut accept = false;
        let mut candidate_loglik = f64::NEG_INFINITY;
        if prior.contains(&candidate) {
            candidate_loglik = model.analytic_loglik(&candidate, s_obs)?;
            let u: f64 = iter_stream.child(CHILD_ACCEPT).rng().random();
            accept = u.ln() < candidate_loglik - loglik;
        }
        if accept {
            theta = candidate;
            loglik = candidate_loglik;
            accepted_moves += 1;
        }
        records.push(ChainRecord { iteration: t, theta: theta.clone(), loglik, accepted: accept });
    }
    Ok(ChainOutput {
        records,
        acceptance_rate: accepted_moves as f64 / iterations as f64,
        simulation_calls: 0,
    })
}

/// Spread of repeated synthetic log-likelihood estimates at a fixed point.
#[derive(Clone, Copy, Debug)]
pub struct SdEstimate {
    /// Sample standard deviation over the replicates.
    pub sd: f64,
    /// Sample mean over the replicates.
    pub mean: f64,
    pub replicates: usize,
}

/// Estimate the sampling standard deviation of the synthetic
/// log-likelihood at `theta` from independent replicate batches of `n`
/// simulations. Replicate `r` uses `stream.child(r)` with the same
/// simulation-block layout as a sampler iteration.
///
/// A replicate whose estimate is degenerate (non-PD covariance, failed
/// batch) makes the spread meaningless; that is reported as
/// [`SamplerError::DegenerateLikelihood`], which tuners read as "more
/// variable than any target".
pub fn loglik_sd_at(
    model: &dyn Model,
    s_obs: &[f64],
    theta: &[f64],
    n: usize,
    shrinkage: &ShrinkageSpec,
    whitening: Option<&WhiteningMatrix>,
    replicates: usize,
    stream: Stream,
) -> Result<SdEstimate, SamplerError> {
    if replicates < 2 {
        return Err(SamplerError::Config(format!(
            "need at least 2 replicates to estimate a standard deviation, got {replicates}"
        )));
    }
    if replicates < 20 {
        log::warn!("log-likelihood spread estimated from only {replicates} replicates");
    }
    let config = SamplerConfig {
        iterations: 1,
        burn_in: 0,
        n_draws: n,
        shrinkage: *shrinkage,
        whitening: whitening.cloned(),
        initial_mean: None,
        theta0: theta.to_vec(),
        seed: 0,
    };
    config.validate(model)?;
    let s_work: Vec<f64> = match whitening {
        Some(w) => w.whiten_vec(s_obs)?,
        None => s_obs.to_vec(),
    };
    let calls = AtomicU64::new(0);
    let values: Vec<BatchLoglik> = (0..replicates)
        .map(|r| {
            proposal_loglik(
                model,
                &s_work,
                theta,
                &config,
                stream.child(r as u64).child(CHILD_SIMS),
                &calls,
            )
        })
        .collect::<Result<_, _>>()?;
    let mut finite = Vec::with_capacity(replicates);
    for v in values {
        match v {
            BatchLoglik::Value(x) => finite.push(x),
            BatchLoglik::Degenerate => {
                return Err(SamplerError::DegenerateLikelihood(format!(
                    "degenerate estimate at n = {n} with {shrinkage:?}"
                )));
            }
        }
    }
    let m = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / m;
    let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    Ok(SdEstimate { sd: var.sqrt(), mean, replicates: finite.len() })
}

/// Result of tuning the number of simulations per estimate.
#[derive(Clone, Copy, Debug)]
pub struct TunedN {
    pub n: usize,
    /// Log-likelihood standard deviation measured at `n`.
    pub sd: f64,
    pub mean_loglik: f64,
}

/// Result of tuning the shrinkage level at a fixed `n`.
#[derive(Clone, Copy, Debug)]
pub struct TunedGamma {
    pub gamma: f64,
    pub sd: f64,
    pub mean_loglik: f64,
    /// Set when even complete shrinkage leaves the spread above the target
    /// ceiling, so `gamma = 0` was returned as a floor.
    pub at_floor: bool,
}

fn validate_target(target: (f64, f64)) -> Result<(), SamplerError> {
    let (lo, hi) = target;
    if !(lo >= 0.0 && hi > lo) {
        return Err(SamplerError::Config(format!(
            "target interval must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

enum Probe {
    Sd(SdEstimate),
    /// Degenerate estimate: effectively unbounded spread.
    TooVariable,
}

fn probe_sd(
    model: &dyn Model,
    s_obs: &[f64],
    theta: &[f64],
    n: usize,
    shrinkage: &ShrinkageSpec,
    whitening: Option<&WhiteningMatrix>,
    replicates: usize,
    stream: Stream,
) -> Result<Probe, SamplerError> {
    match loglik_sd_at(model, s_obs, theta, n, shrinkage, whitening, replicates, stream) {
        Ok(e) => Ok(Probe::Sd(e)),
        Err(SamplerError::DegenerateLikelihood(_)) => Ok(Probe::TooVariable),
        Err(e) => Err(e),
    }
}

/// Smallest `n` (on a doubling-then-bisection schedule) whose
/// log-likelihood standard deviation at `theta0` is at most the target
/// ceiling. When even the minimum usable `n` measures below the floor the
/// minimum is returned: fewer simulations than that do not exist.
///
/// Probe `i` of the search draws from `stream.child(i)`.
#[allow(clippy::too_many_arguments)]
pub fn tune_n(
    model: &dyn Model,
    s_obs: &[f64],
    theta0: &[f64],
    shrinkage: &ShrinkageSpec,
    whitening: Option<&WhiteningMatrix>,
    target: (f64, f64),
    replicates: usize,
    cap: usize,
    stream: Stream,
) -> Result<TunedN, SamplerError> {
    validate_target(target)?;
    let (_, hi) = target;
    // Without shrinkage (or at gamma = 1) the sample covariance must be
    // full rank, requiring n > d; partial shrinkage and ridge repair rank.
    let full_rank_needed = matches!(
        shrinkage,
        ShrinkageSpec::None | ShrinkageSpec::Warton { gamma: 1.0 }
    );
    let n_min = if full_rank_needed { model.summary_dim() + 2 } else { 2 };
    if n_min > cap {
        return Err(SamplerError::TuningCapExceeded { cap, last_sd: f64::INFINITY });
    }
    let mut probe_index = 0u64;
    let mut next_probe = |n: usize| -> Result<Probe, SamplerError> {
        let p = probe_sd(
            model,
            s_obs,
            theta0,
            n,
            shrinkage,
            whitening,
            replicates,
            stream.child(probe_index),
        );
        probe_index += 1;
        p
    };

    let mut last_sd = f64::INFINITY;
    match next_probe(n_min)? {
        Probe::Sd(e) if e.sd <= hi => {
            return Ok(TunedN { n: n_min, sd: e.sd, mean_loglik: e.mean });
        }
        Probe::Sd(e) => last_sd = e.sd,
        Probe::TooVariable => {}
    }

    // Doubling phase: find an upper bracket whose spread meets the ceiling.
    let mut low = n_min;
    let mut best: (usize, SdEstimate);
    let mut high: usize;
    loop {
        let candidate = low.saturating_mul(2);
        if candidate > cap {
            return Err(SamplerError::TuningCapExceeded { cap, last_sd });
        }
        match next_probe(candidate)? {
            Probe::Sd(e) if e.sd <= hi => {
                best = (candidate, e);
                high = candidate;
                break;
            }
            Probe::Sd(e) => {
                last_sd = e.sd;
                low = candidate;
            }
            Probe::TooVariable => {
                last_sd = f64::INFINITY;
                low = candidate;
            }
        }
    }
    // Bisection phase: shrink to the smallest n meeting the ceiling.
    while high - low > 1 {
        let mid = low + (high - low) / 2;
        match next_probe(mid)? {
            Probe::Sd(e) if e.sd <= hi => {
                best = (mid, e);
                high = mid;
            }
            _ => low = mid,
        }
    }
    Ok(TunedN { n: best.0, sd: best.1.sd, mean_loglik: best.1.mean })
}

/// Largest shrinkage level `gamma` whose log-likelihood standard deviation
/// at `theta0` is at most the target ceiling, found by bisection to a
/// resolution of 0.005. Returns `gamma = 0` (flagged `at_floor`) when even
/// complete shrinkage stays above the ceiling.
///
/// Probe `i` of the search draws from `stream.child(i)`.
#[allow(clippy::too_many_arguments)]
pub fn tune_gamma(
    model: &dyn Model,
    s_obs: &[f64],
    theta0: &[f64],
    n: usize,
    whitening: Option<&WhiteningMatrix>,
    target: (f64, f64),
    replicates: usize,
    stream: Stream,
) -> Result<TunedGamma, SamplerError> {
    validate_target(target)?;
    let (_, hi) = target;
    let mut probe_index = 0u64;
    let mut next_probe = |gamma: f64| -> Result<Probe, SamplerError> {
        let shrinkage = ShrinkageSpec::Warton { gamma };
        let p = probe_sd(
            model,
            s_obs,
            theta0,
            n,
            &shrinkage,
            whitening,
            replicates,
            stream.child(probe_index),
        );
        probe_index += 1;
        p
    };

    if let Probe::Sd(e) = next_probe(1.0)? {
        if e.sd <= hi {
            return Ok(TunedGamma { gamma: 1.0, sd: e.sd, mean_loglik: e.mean, at_floor: false });
        }
    }
    let floor = match next_probe(0.0)? {
        Probe::Sd(e) if e.sd <= hi => e,
        Probe::Sd(e) => {
            log::warn!(
                "even complete shrinkage leaves log-likelihood sd {} above the ceiling {hi}; \
                 increase n",
                e.sd
            );
            return Ok(TunedGamma { gamma: 0.0, sd: e.sd, mean_loglik: e.mean, at_floor: true });
        }
        Probe::TooVariable => {
            log::warn!("complete shrinkage is degenerate at n = {n}; increase n");
            return Ok(TunedGamma { gamma: 0.0, sd: f64::NAN, mean_loglik: f64::NAN, at_floor: true });
        }
    };

    let mut good = (0.0, floor);
    let mut bad = 1.0f64;
    while bad - good.0 > 0.005 {
        let mid = 0.5 * (bad + good.0);
        match next_probe(mid)? {
            Probe::Sd(e) if e.sd <= hi => good = (mid, e),
            _ => bad = mid,
        }
    }
    Ok(TunedGamma { gamma: good.0, sd: good.1.sd, mean_loglik: good.1.mean, at_floor: false })
}
