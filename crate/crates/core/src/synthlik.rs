//! Synthetic likelihood: Gaussian approximation to the distribution of
//! simulated summary statistics.
//!
//! Given `n` model simulations summarized as rows of a [`SummaryMatrix`],
//! the synthetic log-likelihood of an observed summary `s` is the
//! multivariate normal log-density of `s` under the sample mean and sample
//! covariance of the rows, optionally stabilized by covariance shrinkage.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cholesky_lower, forward_substitute, LinalgError, SymmetricMatrix};

const LN_TWO_PI: f64 = 1.8378770664093453;

#[derive(Debug, Error)]
pub enum SynthLikError {
    #[error("summary matrix needs at least 2 rows to estimate a covariance, got {0}")]
    TooFewDraws(usize),
    #[error("summary matrix must have at least one column")]
    NoColumns,
    #[error("summary rows have inconsistent lengths ({first} vs {other} at row {row})")]
    RaggedRows { first: usize, other: usize, row: usize },
    #[error("non-finite summary value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("estimated covariance is not positive definite; increase the number of draws or apply shrinkage")]
    NotPositiveDefinite,
    #[error("coordinate {index} has non-positive sample variance {value:e}; shrinkage toward a diagonal target is undefined")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("invalid shrinkage: {0}")]
    InvalidShrinkage(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl SynthLikError {
    /// True for failures that mean "this parameter's likelihood estimate is
    /// unusable" (degenerate covariance) rather than a caller bug; samplers
    /// treat these as log-likelihood negative infinity.
    pub fn is_degenerate_estimate(&self) -> bool {
        matches!(
            self,
            SynthLikError::NotPositiveDefinite | SynthLikError::NonPositiveVariance { .. }
        )
    }
}

/// A batch of simulated summaries, one draw per row, validated finite with
/// at least two rows (so a sample covariance exists).
#[derive(Clone, Debug)]
pub struct SummaryMatrix {
    data: DMatrix<f64>,
}

impl SummaryMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self, SynthLikError> {
        if data.nrows() < 2 {
            return Err(SynthLikError::TooFewDraws(data.nrows()));
        }
        if data.ncols() == 0 {
            return Err(SynthLikError::NoColumns);
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                let v = data[(i, j)];
                if !v.is_finite() {
                    return Err(SynthLikError::NonFinite { row: i, col: j, value: v });
                }
            }
        }
        Ok(SummaryMatrix { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SynthLikError> {
        if rows.len() < 2 {
            return Err(SynthLikError::TooFewDraws(rows.len()));
        }
        let d = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(SynthLikError::RaggedRows {
                    first: d,
                    other: row.len(),
                    row: i,
                });
            }
        }
        let data = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(data)
    }

    /// Number of draws (rows).
    pub fn n_draws(&self) -> usize {
        self.data.nrows()
    }

    /// Summary dimension (columns).
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n_draws() as f64;
        (0..self.dim())
            .map(|j| self.data.column(j).sum() / n)
            .collect()
    }

    /// Unbiased per-column sample variances.
    pub fn column_variances(&self) -> Vec<f64> {
        let n = self.n_draws();
        let means = self.column_means();
        (0..self.dim())
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    let r = self.data[(i, j)] - means[j];
                    acc += r * r;
                }
                acc / (n as f64 - 1.0)
            })
            .collect()
    }
}

/// Sample mean and unbiased sample covariance of a summary batch.
#[derive(Clone, Debug)]
pub struct MomentEstimate {
    pub mean: Vec<f64>,
    pub cov: SymmetricMatrix,
    /// Number of draws behind the estimate.
    pub n_draws: usize,
}

/// Sample moments of the rows: mean vector and unbiased (n - 1 divisor)
/// covariance matrix.
pub fn sample_moments(summaries: &SummaryMatrix) -> MomentEstimate {
    let n = summaries.n_draws();
    let d = summaries.dim();
    let mean = summaries.column_means();
    let mut centered = summaries.matrix().clone();
    for j in 0..d {
        let mut col = centered.column_mut(j);
        col.add_scalar_mut(-mean[j]);
    }
    let product = centered.transpose() * &centered;
    let scale = 1.0 / (n as f64 - 1.0);
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..d {
        cov[(i, i)] = product[(i, i)] * scale;
        for j in (i + 1)..d {
            let v = 0.5 * (product[(i, j)] + product[(j, i)]) * scale;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    MomentEstimate {
        mean,
        cov: SymmetricMatrix::from_symmetric_unchecked(cov),
        n_draws: n,
    }
}

/// Covariance stabilization applied to the sample covariance before the
/// Gaussian density is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShrinkageSpec {
    /// Use the raw sample covariance.
    None,
    /// Scale correlations toward zero: off-diagonal entries are multiplied
    /// by `gamma` while variances are kept exactly. `gamma = 1` is the raw
    /// estimate, `gamma = 0` the diagonal estimate.
    Warton { gamma: f64 },
    /// Add `kappa` to every variance.
    Ridge { kappa: f64 },
}

impl ShrinkageSpec {
    pub fn none() -> Self {
        ShrinkageSpec::None
    }

    pub fn warton(gamma: f64) -> Result<Self, SynthLikError> {
        if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
            return Err(SynthLikError::InvalidShrinkage(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        Ok(ShrinkageSpec::Warton { gamma })
    }

    pub fn ridge(kappa: f64) -> Result<Self, SynthLikError> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(SynthLikError::InvalidShrinkage(format!(
                "kappa must be non-negative, got {kappa}"
            )));
        }
        Ok(ShrinkageSpec::Ridge { kappa })
    }

    /// Validate parameter ranges (useful after deserializing).
    pub fn validate(&self) -> Result<(), SynthLikError> {
        match *self {
            ShrinkageSpec::None => Ok(()),
            ShrinkageSpec::Warton { gamma } => Self::warton(gamma).map(|_| ()),
            ShrinkageSpec::Ridge { kappa } => Self::ridge(kappa).map(|_| ()),
        }
    }

    /// True when the spec collapses the estimate to its diagonal, enabling
    /// the O(d) likelihood path without inspecting matrix entries.
    pub fn is_diagonalizing(&self) -> bool {
        matches!(self, ShrinkageSpec::Warton { gamma } if *gamma == 0.0)
    }

    pub fn apply(&self, cov: &SymmetricMatrix) -> Result<SymmetricMatrix, SynthLikError> {
        match *self {
            ShrinkageSpec::None => Ok(cov.clone()),
            ShrinkageSpec::Warton { gamma } => warton_shrink(cov, gamma),
            ShrinkageSpec::Ridge { kappa } => ridge_shrink(cov, kappa),
        }
    }
}

/// Warton shrinkage of a covariance estimate.
///
/// Writing `Sigma = D^{1/2} R D^{1/2}` with `D` the diagonal of variances
/// and `R` the sample correlation, the shrunk estimate is
/// `D^{1/2} (gamma R + (1 - gamma) I) D^{1/2}`: correlations scaled toward
/// zero, variances untouched. Because `R` has unit diagonal this reduces to
/// multiplying every off-diagonal entry by `gamma`, which is how it is
/// computed — the diagonal of the output equals the input bit for bit, and
/// for `gamma < 1` the result is positive definite whenever the variances
/// are positive, even when the sample covariance itself is singular.
pub fn warton_shrink(cov: &SymmetricMatrix, gamma: f64) -> Result<SymmetricMatrix, SynthLikError> {
    if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
        return Err(SynthLikError::InvalidShrinkage(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let d = cov.dim();
    for i in 0..d {
        let v = cov[(i, i)];
        if !(v > 0.0) {
            return Err(SynthLikError::NonPositiveVariance { index: i, value: v });
        }
    }
    Ok(SymmetricMatrix::from_fn(d, |i, j| {
        if i == j {
            cov[(i, i)]
        } else {
            gamma * cov[(i, j)]
        }
    })?)
}

/// Ridge regularization: `Sigma + kappa I`.
pub fn ridge_shrink(cov: &SymmetricMatrix, kappa: f64) -> Result<SymmetricMatrix, SynthLikError> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(SynthLikError::InvalidShrinkage(format!(
            "kappa must be non-negative, got {kappa}"
        )));
    }
    let d = cov.dim();
    Ok(SymmetricMatrix::from_fn(d, |i, j| {
        if i == j {
            cov[(i, i)] + kappa
        } else {
            cov[(i, j)]
        }
    })?)
}

/// Log-density of `N(mean, diag(variances))` at `s`.
fn diagonal_loglik(s: &[f64], mean: &[f64], variances: &[f64]) -> Result<f64, SynthLikError> {
    let mut ll = 0.0;
    for i in 0..s.len() {
        let v = variances[i];
        if !(v > 0.0) {
            return Err(SynthLikError::NotPositiveDefinite);
        }
        let r = s[i] - mean[i];
        ll -= 0.5 * (LN_TWO_PI + v.ln() + r * r / v);
    }
    Ok(ll)
}

/// Multivariate normal log-density of `s` under `N(mean, cov)`.
///
/// Uses a Cholesky factorization; when every off-diagonal entry of `cov` is
/// exactly zero an O(d) diagonal path is taken instead. A covariance that
/// fails to factor yields [`SynthLikError::NotPositiveDefinite`], which
/// samplers treat as log-likelihood negative infinity.
pub fn gaussian_loglik(
    s: &[f64],
    mean: &[f64],
    cov: &SymmetricMatrix,
) -> Result<f64, SynthLikError> {
    let d = cov.dim();
    if s.len() != d {
        return Err(SynthLikError::DimensionMismatch { expected: d, actual: s.len() });
    }
    if mean.len() != d {
        return Err(SynthLikError::DimensionMismatch { expected: d, actual: mean.len() });
    }
    if cov.is_diagonal() {
        return diagonal_loglik(s, mean, &cov.diagonal());
    }
    let l = match cholesky_lower(cov) {
        Ok(l) => l,
        Err(LinalgError::NotPositiveDefinite) => return Err(SynthLikError::NotPositiveDefinite),
        Err(e) => return Err(SynthLikError::Linalg(e)),
    };
    let resid: Vec<f64> = (0..d).map(|i| s[i] - mean[i]).collect();
    let z = forward_substitute(&l, &resid);
    let mut log_det_half = 0.0;
    for i in 0..d {
        log_det_half += l[(i, i)].ln();
    }
    let quad: f64 = z.iter().map(|v| v * v).sum();
    Ok(-0.5 * d as f64 * LN_TWO_PI - log_det_half - 0.5 * quad)
}

/// A synthetic log-likelihood evaluation and the moment estimate behind it.
#[derive(Clone, Debug)]
pub struct SyntheticLogLik {
    pub value: f64,
    pub mean_used: Vec<f64>,
    pub cov_used: SymmetricMatrix,
    pub n_draws: usize,
    pub shrinkage: ShrinkageSpec,
}

/// Synthetic log-likelihood of the observed summary `s_obs` under the
/// Gaussian fitted to `draws`, with the covariance stabilized by `shrinkage`.
///
/// Complete Warton shrinkage (`gamma = 0`) is recognized structurally and
/// computes only per-column variances, skipping the full covariance.
pub fn synthetic_loglik(
    s_obs: &[f64],
    draws: &SummaryMatrix,
    shrinkage: &ShrinkageSpec,
) -> Result<SyntheticLogLik, SynthLikError> {
    let d = draws.dim();
    if s_obs.len() != d {
        return Err(SynthLikError::DimensionMismatch { expected: d, actual: s_obs.len() });
    }
    shrinkage.validate()?;

    if shrinkage.is_diagonalizing() {
        let mean = draws.column_means();
        let variances = draws.column_variances();
        for (i, &v) in variances.iter().enumerate() {
            if !(v > 0.0) {
                return Err(SynthLikError::NonPositiveVariance { index: i, value: v });
            }
        }
        let value = diagonal_loglik(s_obs, &mean, &variances)?;
        return Ok(SyntheticLogLik {
            value,
            mean_used: mean,
            cov_used: SymmetricMatrix::from_diagonal(&variances)?,
            n_draws: draws.n_draws(),
            shrinkage: *shrinkage,
        });
    }

    let moments = sample_moments(draws);
    let cov_used = shrinkage.apply(&moments.cov)?;
    let value = gaussian_loglik(s_obs, &moments.mean, &cov_used)?;
    Ok(SyntheticLogLik {
        value,
        mean_used: moments.mean,
        cov_used,
        n_draws: draws.n_draws(),
        shrinkage: *shrinkage,
    })
}
