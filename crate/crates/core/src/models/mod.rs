//! Problem definitions: simulators, summary maps, priors, and (where they
//! exist) analytic likelihoods.
//!
//! A [`Model`] bundles everything a sampler needs: a prior over parameters,
//! a stochastic simulator producing raw data, and a summary map turning raw
//! data into the statistic vector the synthetic likelihood is built on.

pub mod ar1;
pub mod ma2;
pub mod normal;
pub mod stable;
pub mod toads;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, SymmetricMatrix};
use crate::synthlik::SynthLikError;

pub use ar1::Ar1Model;
pub use ma2::Ma2Model;
pub use normal::NormalToyModel;
pub use stable::stable_sample;
pub use toads::{toad_simulate, toad_summaries, ToadParams, ToadsModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter vector has length {actual}, model expects {expected}")]
    WrongParameterCount { expected: usize, actual: usize },
    #[error("parameters outside the model support: {detail}")]
    OutOfSupport { detail: String },
    #[error("simulation produced unusable summaries: {detail}")]
    DegenerateSimulation { detail: String },
    #[error("invalid model settings: {detail}")]
    InvalidSettings { detail: String },
    #[error("observed data has the wrong shape: {detail}")]
    WrongDataShape { detail: String },
    #[error("model provides no analytic form for this quantity")]
    NoAnalyticForm,
    #[error("unknown model name {0:?}")]
    UnknownModel(String),
    #[error("failed to read observed data: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not parse observed data at line {line}: {detail}")]
    ParseData { line: usize, detail: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    SynthLik(#[from] SynthLikError),
}

impl ModelError {
    /// True for failures that are a property of one random draw rather than
    /// of the parameters; callers may retry with a fresh substream.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ModelError::DegenerateSimulation { .. })
    }
}

/// Extra support restrictions beyond per-coordinate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportConstraint {
    /// The box alone defines the support.
    BoxOnly,
    /// Second-order moving-average invertibility triangle:
    /// `theta1 + theta2 > -1` and `theta1 - theta2 < 1`.
    Ma2Invertibility,
}

/// A uniform prior over a (possibly constrained) box. Bounds may be
/// infinite, in which case the prior is improper; the log-density is the
/// unnormalized 0 / -infinity indicator either way.
#[derive(Clone, Debug)]
pub struct Prior {
    bounds: Vec<(f64, f64)>,
    constraint: SupportConstraint,
}

impl Prior {
    /// Uniform prior over an open box. Panics if any lower bound is not
    /// strictly below its upper bound (a programming error in a model
    /// definition, not a runtime condition).
    pub fn uniform(bounds: Vec<(f64, f64)>) -> Self {
        Self::with_constraint(bounds, SupportConstraint::BoxOnly)
    }

    pub fn with_constraint(bounds: Vec<(f64, f64)>, constraint: SupportConstraint) -> Self {
        assert!(!bounds.is_empty(), "prior needs at least one coordinate");
        for &(lo, hi) in &bounds {
            assert!(lo < hi, "prior bounds must satisfy lower < upper, got ({lo}, {hi})");
        }
        if constraint == SupportConstraint::Ma2Invertibility {
            assert!(bounds.len() == 2, "invertibility constraint applies to two parameters");
        }
        Prior { bounds, constraint }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn constraint(&self) -> SupportConstraint {
        self.constraint
    }

    /// Strict-interior membership: every coordinate inside its open
    /// interval and any joint constraint satisfied.
    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.bounds.len() {
            return false;
        }
        for (v, &(lo, hi)) in theta.iter().zip(&self.bounds) {
            if !(v.is_finite() && *v > lo && *v < hi) {
                return false;
            }
        }
        match self.constraint {
            SupportConstraint::BoxOnly => true,
            SupportConstraint::Ma2Invertibility => {
                theta[0] + theta[1] > -1.0 && theta[0] - theta[1] < 1.0
            }
        }
    }

    /// Unnormalized log-density: 0 inside the support, -infinity outside.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if self.contains(theta) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    /// True when every bound is finite, so the prior integrates to a finite
    /// constant and [`Prior::sample`] is available.
    pub fn is_proper(&self) -> bool {
        self.bounds.iter().all(|&(lo, hi)| lo.is_finite() && hi.is_finite())
    }

    /// Draw from the prior by rejection under the joint constraint.
    ///
    /// Panics if the prior is improper (infinite bounds); callers needing
    /// draws from such models must supply their own proposal region.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        assert!(self.is_proper(), "cannot sample an improper prior");
        // The only joint constraint in use keeps at least a quarter of the
        // box, so rejection terminates quickly; the bound is a safety net.
        for _ in 0..10_000 {
            let draw: Vec<f64> = self
                .bounds
                .iter()
                .map(|&(lo, hi)| rand::Rng::random_range(&mut *rng, lo..hi))
                .collect();
            if self.contains(&draw) {
                return draw;
            }
        }
        unreachable!("prior rejection sampling failed to terminate");
    }
}

/// A simulation model: prior, simulator, summary map, and optional analytic
/// forms used by reference samplers and deterministic studies.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    fn parameter_names(&self) -> &'static [&'static str];

    fn param_count(&self) -> usize {
        self.parameter_names().len()
    }

    /// Length of the summary-statistic vector.
    fn summary_dim(&self) -> usize;

    fn prior(&self) -> &Prior;

    /// Simulate one raw dataset (rows of observations; a single row for
    /// time-series models, one row per individual otherwise).
    fn simulate_raw(&self, theta: &[f64], rng: &mut dyn RngCore)
        -> Result<Vec<Vec<f64>>, ModelError>;

    /// Map a raw dataset to the summary-statistic vector.
    fn summarize(&self, raw: &[Vec<f64>]) -> Result<Vec<f64>, ModelError>;

    /// Simulate one summary vector: the composition of
    /// [`Model::simulate_raw`] and [`Model::summarize`].
    fn simulate_summaries(
        &self,
        theta: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>, ModelError> {
        let raw = self.simulate_raw(theta, rng)?;
        self.summarize(&raw)
    }

    /// Exact covariance of the summary vector at `theta`, for models whose
    /// summary distribution is known in closed form.
    fn analytic_cov(&self, _theta: &[f64]) -> Result<SymmetricMatrix, ModelError> {
        Err(ModelError::NoAnalyticForm)
    }

    /// Exact log-likelihood of an observed summary vector at `theta`.
    fn analytic_loglik(&self, _theta: &[f64], _s_obs: &[f64]) -> Result<f64, ModelError> {
        Err(ModelError::NoAnalyticForm)
    }

    fn has_analytic_loglik(&self) -> bool {
        false
    }
}

/// Check parameter length and prior support; shared by the simulators.
pub(crate) fn ensure_in_support(model: &dyn Model, theta: &[f64]) -> Result<(), ModelError> {
    if theta.len() != model.param_count() {
        return Err(ModelError::WrongParameterCount {
            expected: model.param_count(),
            actual: theta.len(),
        });
    }
    if !model.prior().contains(theta) {
        return Err(ModelError::OutOfSupport {
            detail: format!("{:?} for model {}", theta, model.name()),
        });
    }
    Ok(())
}

/// Model choice plus its settings, as written in run configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ModelSettings {
    /// Second-order moving-average series of length `t0`.
    Ma2 { t0: usize },
    /// First-order autoregressive series of length `t0`.
    Ar1 { t0: usize },
    /// Correlated `k`-dimensional normal with mean and noise parameters.
    Normal { k: usize },
    /// Random-return animal movement model.
    Toads {
        n_toads: usize,
        n_days: usize,
        /// Compute the per-lag quantile spreads from all displacements
        /// rather than only those past the return-distance threshold.
        #[serde(default)]
        quantiles_on_all: bool,
    },
}

/// Instantiate the model a settings block describes.
pub fn build_model(settings: &ModelSettings) -> Result<Box<dyn Model>, ModelError> {
    match *settings {
        ModelSettings::Ma2 { t0 } => Ok(Box::new(Ma2Model::new(t0)?)),
        ModelSettings::Ar1 { t0 } => Ok(Box::new(Ar1Model::new(t0)?)),
        ModelSettings::Normal { k } => Ok(Box::new(NormalToyModel::new(k)?)),
        ModelSettings::Toads { n_toads, n_days, quantiles_on_all } => {
            Ok(Box::new(ToadsModel::new(n_toads, n_days, quantiles_on_all)?))
        }
    }
}

/// Read an observed dataset from CSV: one row per series/individual,
/// comma-separated floats, optional single header line.
pub fn load_observed_csv(path: &Path) -> Result<Vec<Vec<f64>>, ModelError> {
    let file = File::open(path)?;
    read_observed(BufReader::new(file))
}

/// CSV-reading core, separated from the filesystem for testability.
pub fn read_observed<R: BufRead>(reader: R) -> Result<Vec<Vec<f64>>, ModelError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> =
            trimmed.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(w) = width {
                    if row.len() != w {
                        return Err(ModelError::ParseData {
                            line: idx + 1,
                            detail: format!("row has {} fields, expected {w}", row.len()),
                        });
                    }
                } else {
                    width = Some(row.len());
                }
                rows.push(row);
            }
            Err(e) => {
                // A non-numeric first line is a header; anywhere else it is
                // an error.
                if idx == 0 && rows.is_empty() {
                    continue;
                }
                return Err(ModelError::ParseData { line: idx + 1, detail: e.to_string() });
            }
        }
    }
    if rows.is_empty() {
        return Err(ModelError::WrongDataShape { detail: "no data rows found".to_string() });
    }
    Ok(rows)
}
