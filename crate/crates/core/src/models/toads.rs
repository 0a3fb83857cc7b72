//! Random-return movement model for nocturnally foraging amphibians.
//!
//! Each animal starts at refuge position 0. Every night it either moves to
//! `current + dx` with `dx` drawn from a symmetric alpha-stable
//! distribution (probability `1 - p0`), or returns to one of its previous
//! refuges, chosen with probability proportional to the number of nights
//! spent there (probability `p0`). The observed data are the refuge
//! positions; summaries pool absolute displacements at several day lags.

use rand::{Rng, RngCore};

use crate::models::stable::standard_stable;
use crate::models::{ensure_in_support, Model, ModelError, Prior};

/// Day lags at which displacement distributions are summarized.
pub const TOAD_LAGS: [usize; 4] = [1, 2, 4, 8];

/// Displacements shorter than this (in meters) are treated as returns to
/// the same refuge and only counted, not measured.
pub const RETURN_DISTANCE_THRESHOLD: f64 = 10.0;

/// Summary entries produced per lag: a count, a median, and ten
/// log-quantile-spreads.
const PER_LAG: usize = 12;

#[derive(Clone, Copy, Debug)]
pub struct ToadParams {
    pub alpha: f64,
    pub xi: f64,
    pub p0: f64,
    pub n_toads: usize,
    pub n_days: usize,
}

impl ToadParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.alpha >= 1.0 && self.alpha <= 2.0) {
            return Err(ModelError::OutOfSupport {
                detail: format!("stability must lie in [1, 2], got {}", self.alpha),
            });
        }
        if !(self.xi > 0.0) || !self.xi.is_finite() {
            return Err(ModelError::OutOfSupport {
                detail: format!("scale must be positive, got {}", self.xi),
            });
        }
        if !(0.0..=0.9).contains(&self.p0) {
            return Err(ModelError::OutOfSupport {
                detail: format!("return probability must lie in [0, 0.9], got {}", self.p0),
            });
        }
        if self.n_toads == 0 {
            return Err(ModelError::InvalidSettings {
                detail: "need at least one toad".to_string(),
            });
        }
        if self.n_days <= *TOAD_LAGS.last().unwrap() {
            return Err(ModelError::InvalidSettings {
                detail: format!(
                    "need more than {} days to form all displacement lags, got {}",
                    TOAD_LAGS.last().unwrap(),
                    self.n_days
                ),
            });
        }
        Ok(())
    }
}

/// Simulate refuge positions: one row per toad, one column per day
/// (`1..=n_days`); the day-0 refuge at position 0 is implicit.
pub fn toad_simulate(
    params: &ToadParams,
    rng: &mut dyn RngCore,
) -> Result<Vec<Vec<f64>>, ModelError> {
    params.validate()?;
    let mut rows = Vec::with_capacity(params.n_toads);
    for _ in 0..params.n_toads {
        // History includes day 0, so a site occupied on k nights appears k
        // times and uniform indexing weights refuges by occupancy.
        let mut history = Vec::with_capacity(params.n_days + 1);
        history.push(0.0f64);
        for _ in 0..params.n_days {
            let returns: bool = rng.random::<f64>() < params.p0;
            let next = if returns {
                history[rng.random_range(0..history.len())]
            } else {
                history.last().unwrap() + params.xi * standard_stable(params.alpha, &mut *rng)
            };
            history.push(next);
        }
        rows.push(history[1..].to_vec());
    }
    Ok(rows)
}

/// Linear-interpolation quantile of pre-sorted data (the convention that
/// places probability `p` at rank `(len - 1) * p`).
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Twelve summaries of one lag's pooled absolute displacements: the count
/// below the return threshold, the median of the values at or above it, and
/// the log spreads between consecutive deciles (0, 0.1, ..., 1 quantiles)
/// of the chosen quantile set.
fn lag_summaries(pooled: &[f64], quantiles_on_all: bool) -> Result<[f64; PER_LAG], ModelError> {
    let mut below = 0usize;
    let mut above: Vec<f64> = Vec::with_capacity(pooled.len());
    for &v in pooled {
        if !v.is_finite() {
            return Err(ModelError::DegenerateSimulation {
                detail: "non-finite displacement".to_string(),
            });
        }
        if v < RETURN_DISTANCE_THRESHOLD {
            below += 1;
        } else {
            above.push(v);
        }
    }
    if above.len() < 2 {
        return Err(ModelError::DegenerateSimulation {
            detail: format!(
                "only {} displacement(s) at or above {RETURN_DISTANCE_THRESHOLD} m",
                above.len()
            ),
        });
    }
    above.sort_unstable_by(f64::total_cmp);
    let mut out = [0.0f64; PER_LAG];
    out[0] = below as f64;
    out[1] = interpolated_quantile(&above, 0.5);
    let all_sorted;
    let quantile_set: &[f64] = if quantiles_on_all {
        let mut s = pooled.to_vec();
        s.sort_unstable_by(f64::total_cmp);
        all_sorted = s;
        &all_sorted
    } else {
        &above
    };
    let mut prev = interpolated_quantile(quantile_set, 0.0);
    for i in 1..=10 {
        let q = interpolated_quantile(quantile_set, i as f64 / 10.0);
        out[1 + i] = (q - prev).ln();
        prev = q;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::DegenerateSimulation {
            detail: "quantile spreads collapse to zero".to_string(),
        });
    }
    Ok(out)
}

/// The 48 summary statistics of a refuge matrix: for each lag in
/// [`TOAD_LAGS`], absolute displacements `|y[t + lag] - y[t]|` pooled over
/// toads, reduced by [`lag_summaries`].
pub fn toad_summaries(
    refuges: &[Vec<f64>],
    quantiles_on_all: bool,
) -> Result<Vec<f64>, ModelError> {
    if refuges.is_empty() {
        return Err(ModelError::WrongDataShape { detail: "no toads".to_string() });
    }
    let n_days = refuges[0].len();
    if refuges.iter().any(|r| r.len() != n_days) {
        return Err(ModelError::WrongDataShape {
            detail: "toad rows have unequal day counts".to_string(),
        });
    }
    if n_days <= *TOAD_LAGS.last().unwrap() {
        return Err(ModelError::WrongDataShape {
            detail: format!("need more than {} days, got {n_days}", TOAD_LAGS.last().unwrap()),
        });
    }
    let mut out = Vec::with_capacity(TOAD_LAGS.len() * PER_LAG);
    for &lag in &TOAD_LAGS {
        let mut pooled = Vec::with_capacity(refuges.len() * (n_days - lag));
        for row in refuges {
            for t in 0..n_days - lag {
                pooled.push((row[t + lag] - row[t]).abs());
            }
        }
        out.extend_from_slice(&lag_summaries(&pooled, quantiles_on_all)?);
    }
    Ok(out)
}

pub struct ToadsModel {
    n_toads: usize,
    n_days: usize,
    quantiles_on_all: bool,
    prior: Prior,
}

impl ToadsModel {
    pub fn new(n_toads: usize, n_days: usize, quantiles_on_all: bool) -> Result<Self, ModelError> {
        // Validate the shape settings once via a known-good parameter point.
        ToadParams { alpha: 1.5, xi: 1.0, p0: 0.5, n_toads, n_days }.validate()?;
        let prior = Prior::uniform(vec![(1.0, 2.0), (0.0, 100.0), (0.0, 0.9)]);
        Ok(ToadsModel { n_toads, n_days, quantiles_on_all, prior })
    }

    fn params(&self, theta: &[f64]) -> ToadParams {
        ToadParams {
            alpha: theta[0],
            xi: theta[1],
            p0: theta[2],
            n_toads: self.n_toads,
            n_days: self.n_days,
        }
    }
}

impl Model for ToadsModel {
    fn name(&self) -> &'static str {
        "toads"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["alpha", "xi", "p0"]
    }

    fn summary_dim(&self) -> usize {
        TOAD_LAGS.len() * PER_LAG
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn simulate_raw(
        &self,
        theta: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        ensure_in_support(self, theta)?;
        toad_simulate(&self.params(theta), rng)
    }

    fn summarize(&self, raw: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        if raw.len() != self.n_toads {
            return Err(ModelError::WrongDataShape {
                detail: format!("expected {} toads, got {}", self.n_toads, raw.len()),
            });
        }
        toad_summaries(raw, self.quantiles_on_all)
    }
}
