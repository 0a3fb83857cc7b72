//! Run configuration: a single JSON document describing the model, the
//! observed data, the likelihood-estimation settings, and the sampler run.
//! Everything is validated before any simulation starts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use wbsl_core::models::{build_model, load_observed_csv, Model, ModelSettings};
use wbsl_core::sampler::ProposalSpec;
use wbsl_core::stream::Stream;
use wbsl_core::synthlik::ShrinkageSpec;
use wbsl_core::whitening::WhiteningMethod;
use wbsl_core::SymmetricMatrix;

/// Where the observed data comes from: a CSV file of raw data rows, or a
/// synthetic draw at a known parameter value.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObservedSpec {
    File { path: PathBuf },
    Synthetic { theta_true: Vec<f64>, seed: u64 },
}

/// Whitening method selection, with an explicit "none" for standard runs.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WhiteningChoice {
    None,
    Zca,
    ZcaCor,
    Pca,
    PcaCor,
    Cholesky,
}

impl WhiteningChoice {
    pub fn method(self) -> Option<WhiteningMethod> {
        match self {
            WhiteningChoice::None => None,
            WhiteningChoice::Zca => Some(WhiteningMethod::Zca),
            WhiteningChoice::ZcaCor => Some(WhiteningMethod::ZcaCor),
            WhiteningChoice::Pca => Some(WhiteningMethod::Pca),
            WhiteningChoice::PcaCor => Some(WhiteningMethod::PcaCor),
            WhiteningChoice::Cholesky => Some(WhiteningMethod::Cholesky),
        }
    }

    pub fn label(self) -> &'static str {
        match self.method() {
            None => "none",
            Some(m) => m.as_str(),
        }
    }
}

fn default_target() -> (f64, f64) {
    (1.2, 1.8)
}

fn default_replicates() -> usize {
    30
}

fn default_reductions() -> Vec<f64> {
    vec![0.5, 0.8, 0.9]
}

fn default_include_gamma0() -> bool {
    true
}

fn default_cap() -> usize {
    1_000_000
}

/// Settings for the `tune` subcommand.
///
/// The default target band [1.2, 1.8] sits inside the canonical [1, 2]
/// guideline so that a tuned setting re-measured under a fresh seed still
/// lands within [1, 2] despite measurement noise.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSpec {
    /// Acceptable log-likelihood standard-deviation band (lo, hi).
    pub target: (f64, f64),
    /// Replicate estimates per probe.
    pub replicates: usize,
    /// Fractional reductions of the baseline n at which gamma is tuned.
    pub reductions: Vec<f64>,
    /// Also tune n under complete shrinkage (gamma = 0).
    pub include_gamma0: bool,
    /// Upper bound on n during the search.
    pub cap: usize,
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec {
            target: default_target(),
            replicates: default_replicates(),
            reductions: default_reductions(),
            include_gamma0: default_include_gamma0(),
            cap: default_cap(),
        }
    }
}

/// Schedule description for the variance study.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NRuleSpec {
    Fixed { n: usize },
    PerD { c: usize },
    PerDSquared { c: usize },
}

impl NRuleSpec {
    pub fn rule(self) -> wbsl_core::diagnostics::NRule {
        match self {
            NRuleSpec::Fixed { n } => wbsl_core::diagnostics::NRule::Fixed(n),
            NRuleSpec::PerD { c } => wbsl_core::diagnostics::NRule::PerD(c),
            NRuleSpec::PerDSquared { c } => wbsl_core::diagnostics::NRule::PerDSquared(c),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TvStudySpec {
    /// Chain CSV written by a previous `sample` run.
    pub chain_a: PathBuf,
    pub chain_b: PathBuf,
    #[serde(default)]
    pub burn_in: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceStudySpec {
    /// Parameters of the Gaussian test model (location, noise variance).
    pub theta: Vec<f64>,
    pub d_list: Vec<usize>,
    pub n_rule: NRuleSpec,
    pub replicates: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationStudySpec {
    pub theta_true: Vec<f64>,
    /// Number of parameter draws around `theta_true`.
    pub draws: usize,
    /// Per-coordinate half-width of the uniform box the draws come from.
    pub halfwidth: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityStudySpec {
    /// Whitening-estimation points to sweep over.
    pub theta0_list: Vec<Vec<f64>>,
}

/// Study settings; each subcommand requires its own block.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv: Option<TvStudySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceStudySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationStudySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityStudySpec>,
}

/// The complete run configuration.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSettings,
    pub observed: ObservedSpec,
    pub whitening: WhiteningChoice,
    pub shrinkage: ShrinkageSpec,
    /// Simulations per likelihood estimate.
    pub n: usize,
    /// Simulations for the whitening-estimation batch.
    pub n_cov: usize,
    /// Metropolis–Hastings steps.
    pub iterations: usize,
    pub burn_in: usize,
    /// Central parameter value: chain start and whitening-estimation point.
    pub theta0: Vec<f64>,
    /// Row-major proposal covariance (p x p, positive semidefinite).
    pub proposal_cov: Vec<Vec<f64>>,
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub tuning: TuningSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySpec>,
}

/// A parsed, validated configuration with everything derived from it.
pub struct Loaded {
    pub config: RunConfig,
    pub model: Box<dyn Model>,
    pub proposal: ProposalSpec,
    /// Observed summary statistics.
    pub s_obs: Vec<f64>,
    /// SHA-256 of the raw configuration file, for provenance.
    pub config_sha256: String,
    /// Effective master seed after overrides.
    pub seed: u64,
    /// Effective output directory after overrides.
    pub out_dir: PathBuf,
}

/// Load a config file and apply the override precedence: command-line flag,
/// then `WBSL_SEED`/`WBSL_OUT` environment variables, then the file.
pub fn load(
    path: &Path,
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
) -> Result<Loaded> {
    let raw = std::fs::read(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let config: RunConfig = serde_json::from_slice(&raw)
        .with_context(|| format!("cannot parse config file {}", path.display()))?;
    let config_sha256 = crate::output::sha256_hex(&raw);

    let seed = match seed_flag {
        Some(s) => s,
        None => match std::env::var("WBSL_SEED") {
            Ok(v) => v
                .parse::<u64>()
                .with_context(|| format!("WBSL_SEED is not a valid seed: {v:?}"))?,
            Err(_) => config.seed,
        },
    };
    let out_dir = match out_flag {
        Some(o) => o,
        None => match std::env::var("WBSL_OUT") {
            Ok(v) => PathBuf::from(v),
            Err(_) => config.out_dir.clone(),
        },
    };

    // Validate the full pipeline before touching any simulator.
    let model = build_model(&config.model).context("invalid model settings")?;
    let p = model.param_count();
    let d = model.summary_dim();

    if config.theta0.len() != p {
        bail!(
            "theta0 has {} entries; model {:?} has {} parameters",
            config.theta0.len(),
            model.name(),
            p
        );
    }
    if !model.prior().contains(&config.theta0) {
        bail!("theta0 {:?} is outside the prior support", config.theta0);
    }
    config
        .shrinkage
        .validate()
        .context("invalid shrinkage settings")?;
    if config.n < 2 {
        bail!("n must be at least 2, got {}", config.n);
    }
    if config.n_cov < 2 {
        bail!("n_cov must be at least 2, got {}", config.n_cov);
    }
    if config.iterations == 0 {
        bail!("iterations must be at least 1");
    }
    if config.burn_in >= config.iterations {
        bail!(
            "burn_in {} must be smaller than iterations {}",
            config.burn_in,
            config.iterations
        );
    }
    if config.proposal_cov.len() != p
        || config.proposal_cov.iter().any(|row| row.len() != p)
    {
        bail!("proposal_cov must be a {p} x {p} matrix");
    }
    let cov = SymmetricMatrix::from_fn(p, |i, j| {
        0.5 * (config.proposal_cov[i][j] + config.proposal_cov[j][i])
    })
    .context("invalid proposal covariance")?;
    let proposal = ProposalSpec::gaussian(cov).context("invalid proposal covariance")?;

    let s_obs = match &config.observed {
        ObservedSpec::File { path } => {
            let raw_rows = load_observed_csv(path)
                .with_context(|| format!("cannot load observed data {}", path.display()))?;
            model
                .summarize(&raw_rows)
                .context("cannot summarize observed data")?
        }
        ObservedSpec::Synthetic { theta_true, seed } => {
            if theta_true.len() != p {
                bail!(
                    "theta_true has {} entries; model has {} parameters",
                    theta_true.len(),
                    p
                );
            }
            if !model.prior().contains(theta_true) {
                bail!("theta_true {theta_true:?} is outside the prior support");
            }
            let mut rng = Stream::root(*seed).child(0).rng();
            model
                .simulate_summaries(theta_true, &mut rng)
                .context("cannot simulate the observed dataset")?
        }
    };
    if s_obs.len() != d {
        bail!(
            "observed summary has {} entries; model produces {d}",
            s_obs.len()
        );
    }

    Ok(Loaded {
        config,
        model,
        proposal,
        s_obs,
        config_sha256,
        seed,
        out_dir,
    })
}
