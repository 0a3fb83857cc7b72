//! Approximation-quality diagnostics: kernel density estimates, total-
//! variation distances between posterior samples, the variance-scaling
//! study comparing full and diagonal covariance estimators, whitening-
//! deviation surfaces under analytic covariances, and sensitivity sweeps
//! over the whitening-estimation point.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::models::{Model, ModelError, NormalToyModel};
use crate::sampler::{
    estimate_whitening_at, run_chain, run_exact_chain, ChainOutput, ProposalSpec, SamplerConfig,
    SamplerError,
};
use crate::stream::Stream;
use crate::synthlik::{synthetic_loglik, ShrinkageSpec, SummaryMatrix, SynthLikError};
use crate::whitening::{compute_whitening, deviation_l1, WhiteningError, WhiteningMethod};

/// Grid points per axis for density estimates.
pub const GRID_POINTS: usize = 200;
/// Grids extend this many bandwidths beyond the sample range.
pub const GRID_PAD_BANDWIDTHS: f64 = 3.0;

const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },
    #[error("sample coordinate {coordinate} has zero spread; no density can be estimated")]
    DegenerateSamples { coordinate: usize },
    #[error("density grids do not match; re-estimate both on a shared grid")]
    GridMismatch,
    #[error("invalid grid or coordinate selection: {0}")]
    BadSpec(String),
    #[error("variance study requires n > d + 4, got n = {n} at d = {d}")]
    VarianceCondition { d: usize, n: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Whitening(#[from] WhiteningError),
    #[error(transparent)]
    SynthLik(#[from] SynthLikError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// A uniform one-dimensional grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn from_range(min: f64, max: f64, count: usize) -> Result<Self, DiagnosticsError> {
        if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(DiagnosticsError::BadSpec(format!(
                "axis needs a finite range and at least 2 points, got [{min}, {max}] x {count}"
            )));
        }
        Ok(GridAxis { min, step: (max - min) / (count - 1) as f64, count })
    }

    pub fn point(&self, index: usize) -> f64 {
        self.min + self.step * index as f64
    }

    pub fn max(&self) -> f64 {
        self.point(self.count - 1)
    }
}

/// A normalized density evaluated on a uniform grid over one or two
/// coordinates. Values are stored row-major: for two axes, the value at
/// (i, j) sits at `i * axes[1].count + j`.
#[derive(Clone, Debug)]
pub struct DensityGrid {
    axes: Vec<GridAxis>,
    values: Vec<f64>,
    cell_volume: f64,
}

impl DensityGrid {
    fn new(axes: Vec<GridAxis>, mut values: Vec<f64>) -> Result<Self, DiagnosticsError> {
        let cell_volume: f64 = axes.iter().map(|a| a.step).product();
        let total: f64 = values.iter().sum::<f64>() * cell_volume;
        if !total.is_finite() || total <= 0.0 {
            return Err(DiagnosticsError::BadSpec(format!(
                "density mass on the grid is {total}; cannot normalize"
            )));
        }
        for v in &mut values {
            *v /= total;
        }
        Ok(DensityGrid { axes, values, cell_volume })
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume
    }

    /// Density at the grid point nearest to `x` (per coordinate, clamped to
    /// the grid).
    pub fn value_near(&self, x: &[f64]) -> f64 {
        let mut flat = 0usize;
        for (axis, &xi) in self.axes.iter().zip(x) {
            let idx = ((xi - axis.min) / axis.step).round();
            let idx = idx.clamp(0.0, (axis.count - 1) as f64) as usize;
            flat = flat * axis.count + idx;
        }
        self.values[flat]
    }

    /// CSV rows `x,density` (1D) or `x,y,density` (2D), full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.axes.len() {
            1 => {
                out.push_str("x,density\n");
                for (i, v) in self.values.iter().enumerate() {
                    out.push_str(&crate::fmt::format_f64(self.axes[0].point(i)));
                    out.push(',');
                    out.push_str(&crate::fmt::format_f64(*v));
                    out.push('\n');
                }
            }
            _ => {
                out.push_str("x,y,density\n");
                let ny = self.axes[1].count;
                for (flat, v) in self.values.iter().enumerate() {
                    out.push_str(&crate::fmt::format_f64(self.axes[0].point(flat / ny)));
                    out.push(',');
                    out.push_str(&crate::fmt::format_f64(self.axes[1].point(flat % ny)));
                    out.push(',');
                    out.push_str(&crate::fmt::format_f64(*v));
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Bandwidth for coordinate spread `sd` in a `k`-dimensional product-
/// Gaussian kernel over `m` samples: `sd * (4 / ((k + 2) m))^(1/(k+4))`.
pub fn silverman_bandwidth(sd: f64, k: usize, m: usize) -> f64 {
    sd * (4.0 / ((k + 2) as f64 * m as f64)).powf(1.0 / (k as f64 + 4.0))
}

fn column(samples: &[Vec<f64>], dim: usize) -> Vec<f64> {
    samples.iter().map(|s| s[dim]).collect()
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)).sqrt()
}

/// Product-Gaussian kernel density estimate of one or two coordinates of
/// the samples, with per-coordinate Silverman bandwidths.
///
/// When `grid` is `None`, each axis spans the sample range padded by
/// [`GRID_PAD_BANDWIDTHS`] bandwidths, with [`GRID_POINTS`] points. Pass an
/// explicit grid to evaluate several sample sets on a common domain. The
/// result is renormalized to integrate to one.
pub fn kde_estimate(
    samples: &[Vec<f64>],
    dims: &[usize],
    grid: Option<&[GridAxis]>,
) -> Result<DensityGrid, DiagnosticsError> {
    let m = samples.len();
    if m < 100 {
        return Err(DiagnosticsError::TooFewSamples { needed: 100, actual: m });
    }
    let k = dims.len();
    if k == 0 || k > 2 || (k == 2 && dims[0] == dims[1]) {
        return Err(DiagnosticsError::BadSpec(format!(
            "select one or two distinct coordinates, got {dims:?}"
        )));
    }
    let p = samples[0].len();
    if samples.iter().any(|s| s.len() != p) || dims.iter().any(|&d| d >= p) {
        return Err(DiagnosticsError::BadSpec(format!(
            "coordinate selection {dims:?} is invalid for {p}-dimensional samples"
        )));
    }
    if let Some(g) = grid {
        if g.len() != k {
            return Err(DiagnosticsError::BadSpec(format!(
                "grid has {} axes for {k} selected coordinates",
                g.len()
            )));
        }
    }

    let mut cols = Vec::with_capacity(k);
    let mut bandwidths = Vec::with_capacity(k);
    let mut axes = Vec::with_capacity(k);
    for (slot, &dim) in dims.iter().enumerate() {
        let xs = column(samples, dim);
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(DiagnosticsError::BadSpec(format!(
                "coordinate {dim} contains non-finite samples"
            )));
        }
        let sd = sample_sd(&xs);
        if !(sd > 0.0) {
            return Err(DiagnosticsError::DegenerateSamples { coordinate: dim });
        }
        let h = silverman_bandwidth(sd, k, m);
        let axis = match grid {
            Some(g) => g[slot],
            None => {
                let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                GridAxis::from_range(
                    lo - GRID_PAD_BANDWIDTHS * h,
                    hi + GRID_PAD_BANDWIDTHS * h,
                    GRID_POINTS,
                )?
            }
        };
        if axis.count < 2 || !(axis.step > 0.0) {
            return Err(DiagnosticsError::BadSpec("grid axis is degenerate".to_string()));
        }
        cols.push(xs);
        bandwidths.push(h);
        axes.push(axis);
    }

    let values = match k {
        1 => {
            let (xs, h, axis) = (&cols[0], bandwidths[0], axes[0]);
            (0..axis.count)
                .into_par_iter()
                .map(|g| {
                    let t = axis.point(g);
                    let total: f64 = xs
                        .iter()
                        .map(|x| {
                            let u = (t - x) / h;
                            (-0.5 * u * u).exp()
                        })
                        .sum();
                    total * FRAC_1_SQRT_2PI / (m as f64 * h)
                })
                .collect()
        }
        _ => {
            // Product kernel factorizes, so the grid evaluation is a matrix
            // product: (G1 x m) kernel weights times (m x G2).
            let (a_axis, b_axis) = (axes[0], axes[1]);
            let (ha, hb) = (bandwidths[0], bandwidths[1]);
            let left = DMatrix::from_fn(a_axis.count, m, |g, i| {
                let u = (a_axis.point(g) - cols[0][i]) / ha;
                (-0.5 * u * u).exp()
            });
            let right = DMatrix::from_fn(m, b_axis.count, |i, g| {
                let u = (b_axis.point(g) - cols[1][i]) / hb;
                (-0.5 * u * u).exp()
            });
            let product = left * right;
            let scale = FRAC_1_SQRT_2PI * FRAC_1_SQRT_2PI / (m as f64 * ha * hb);
            let mut values = Vec::with_capacity(a_axis.count * b_axis.count);
            for i in 0..a_axis.count {
                for j in 0..b_axis.count {
                    values.push(product[(i, j)] * scale);
                }
            }
            values
        }
    };
    DensityGrid::new(axes, values)
}

/// Total-variation distance `½ Σ |f1 − f2| · cell volume` between two
/// densities on the same grid, clamped to [0, 1].
pub fn tv_distance(f1: &DensityGrid, f2: &DensityGrid) -> Result<f64, DiagnosticsError> {
    if f1.axes != f2.axes {
        return Err(DiagnosticsError::GridMismatch);
    }
    let sum: f64 = f1.values.iter().zip(&f2.values).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * sum * f1.cell_volume).clamp(0.0, 1.0))
}

/// Total-variation distance between two pairs of samples, i.e. between two
/// chains' marginal posteriors for one coordinate, estimated on a shared
/// grid spanning both sample ranges.
pub fn univariate_tv(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    dim: usize,
) -> Result<f64, DiagnosticsError> {
    let axes = shared_axes(a, b, &[dim])?;
    let fa = kde_estimate(a, &[dim], Some(&axes))?;
    let fb = kde_estimate(b, &[dim], Some(&axes))?;
    tv_distance(&fa, &fb)
}

/// One bivariate total-variation entry.
#[derive(Clone, Copy, Debug)]
pub struct PairTv {
    pub i: usize,
    pub j: usize,
    pub tv: f64,
}

fn shared_axes(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    dims: &[usize],
) -> Result<Vec<GridAxis>, DiagnosticsError> {
    let k = dims.len();
    let mut axes = Vec::with_capacity(k);
    for &dim in dims {
        let xa = column(a, dim);
        let xb = column(b, dim);
        let (sa, sb) = (sample_sd(&xa), sample_sd(&xb));
        if !(sa > 0.0) || !(sb > 0.0) {
            return Err(DiagnosticsError::DegenerateSamples { coordinate: dim });
        }
        let h = silverman_bandwidth(sa, k, a.len()).max(silverman_bandwidth(sb, k, b.len()));
        let lo = xa
            .iter()
            .chain(&xb)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = xa
            .iter()
            .chain(&xb)
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        axes.push(GridAxis::from_range(
            lo - GRID_PAD_BANDWIDTHS * h,
            hi + GRID_PAD_BANDWIDTHS * h,
            GRID_POINTS,
        )?);
    }
    Ok(axes)
}

/// Bivariate total-variation distances between two sets of parameter draws
/// for every coordinate pair (i < j), each estimated on a shared grid.
pub fn pairwise_tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<PairTv>, DiagnosticsError> {
    if a.len() < 100 || b.len() < 100 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 100,
            actual: a.len().min(b.len()),
        });
    }
    let p = a[0].len();
    if p < 2 || b[0].len() != p {
        return Err(DiagnosticsError::BadSpec(format!(
            "pairwise distances need two samples of shared dimension >= 2, got {p} and {}",
            b[0].len()
        )));
    }
    let mut out = Vec::with_capacity(p * (p - 1) / 2);
    for i in 0..p {
        for j in (i + 1)..p {
            let dims = [i, j];
            let axes = shared_axes(a, b, &dims)?;
            let fa = kde_estimate(a, &dims, Some(&axes))?;
            let fb = kde_estimate(b, &dims, Some(&axes))?;
            out.push(PairTv { i, j, tv: tv_distance(&fa, &fb)? });
        }
    }
    Ok(out)
}

/// Total-variation summary for chains of any parameter dimension: the
/// single marginal distance when p = 1, otherwise all bivariate pairs.
pub fn chain_tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<PairTv>, DiagnosticsError> {
    if a.is_empty() || b.is_empty() {
        return Err(DiagnosticsError::TooFewSamples { needed: 100, actual: 0 });
    }
    if a[0].len() == 1 && b[0].len() == 1 {
        Ok(vec![PairTv { i: 0, j: 0, tv: univariate_tv(a, b, 0)? }])
    } else {
        pairwise_tv(a, b)
    }
}

/// Post-warm-up parameter draws of a chain.
pub fn chain_draws(out: &ChainOutput, burn_in: usize) -> Vec<Vec<f64>> {
    out.records
        .iter()
        .filter(|r| r.iteration > burn_in)
        .map(|r| r.theta.clone())
        .collect()
}

/// Schedule relating the simulation count to the summary dimension in the
/// variance study.
#[derive(Clone, Copy, Debug)]
pub enum NRule {
    /// The same n at every dimension.
    Fixed(usize),
    /// n = c · d, the schedule that keeps the diagonal estimator's
    /// variance flat.
    PerD(usize),
    /// n = c · d², the schedule that keeps the full estimator's variance
    /// flat.
    PerDSquared(usize),
}

impl NRule {
    pub fn n_for(&self, d: usize) -> usize {
        match *self {
            NRule::Fixed(n) => n,
            NRule::PerD(c) => c * d,
            NRule::PerDSquared(c) => c * d * d,
        }
    }
}

/// One cell of the variance study.
#[derive(Clone, Copy, Debug)]
pub struct VarianceStudyResult {
    pub d: usize,
    pub n: usize,
    /// Variance of the log synthetic likelihood under the full covariance
    /// estimate.
    pub var_full: f64,
    /// Variance under the diagonal (complete-shrinkage) estimate.
    pub var_diag: f64,
    pub replicates: usize,
}

/// Estimate the sampling variance of the log synthetic likelihood under
/// the full and diagonal covariance estimators across summary dimensions,
/// on a Gaussian model where the Gaussian-summaries premise holds exactly.
/// Both estimators see the same simulated batches. Requires n > d + 4 per
/// cell and at least 100 replicates.
///
/// The observation at each dimension is placed at Mahalanobis distance √d
/// from the model mean — the typical distance of a draw — in a random
/// direction. A raw draw would make the quadratic-form component of the
/// variance proportional to the square of a χ²_d realization, drowning the
/// (d, n) scaling these cells exist to expose.
pub fn variance_study(
    theta: &[f64],
    d_list: &[usize],
    n_rule: NRule,
    replicates: usize,
    stream: Stream,
) -> Result<Vec<VarianceStudyResult>, DiagnosticsError> {
    if replicates < 100 {
        return Err(DiagnosticsError::BadSpec(format!(
            "variance study needs at least 100 replicates, got {replicates}"
        )));
    }
    let mut out = Vec::with_capacity(d_list.len());
    for (cell, &d) in d_list.iter().enumerate() {
        let n = n_rule.n_for(d);
        if n <= d + 4 {
            return Err(DiagnosticsError::VarianceCondition { d, n });
        }
        let model = NormalToyModel::new(d)?;
        let cell_stream = stream.child(cell as u64);
        let s_obs = {
            use rand_distr::{Distribution, StandardNormal};
            let cov = model.analytic_cov(theta)?;
            let sqrt = crate::linalg::spectral_decompose(&cov)?
                .map_eigenvalues(|l| l.max(0.0).sqrt());
            let mut rng = cell_stream.child(0).rng();
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = z.iter().map(|v| v * (d as f64).sqrt() / norm).collect();
            let shift = crate::linalg::mat_vec(sqrt.matrix(), &u);
            model
                .analytic_mean(theta)?
                .iter()
                .zip(&shift)
                .map(|(m, s)| m + s)
                .collect::<Vec<f64>>()
        };
        let batches = cell_stream.child(1);
        let pairs: Vec<(f64, f64)> = (0..replicates)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64), DiagnosticsError> {
                let parent = batches.child(r as u64);
                let mut rows = Vec::with_capacity(n);
                for i in 0..n {
                    let mut rng = parent.child(i as u64).rng();
                    rows.push(model.simulate_summaries(theta, &mut rng)?);
                }
                let batch = SummaryMatrix::from_rows(&rows)?;
                let full = synthetic_loglik(&s_obs, &batch, &ShrinkageSpec::None)?;
                let diag =
                    synthetic_loglik(&s_obs, &batch, &ShrinkageSpec::Warton { gamma: 0.0 })?;
                Ok((full.value, diag.value))
            })
            .collect::<Result<_, _>>()?;
        let var = |sel: fn(&(f64, f64)) -> f64| {
            let m = pairs.len() as f64;
            let mean = pairs.iter().map(sel).sum::<f64>() / m;
            pairs.iter().map(|p| (sel(p) - mean) * (sel(p) - mean)).sum::<f64>() / (m - 1.0)
        };
        out.push(VarianceStudyResult {
            d,
            n,
            var_full: var(|p| p.0),
            var_diag: var(|p| p.1),
            replicates,
        });
    }
    Ok(out)
}

/// One row of the whitening-deviation study.
#[derive(Clone, Debug)]
pub struct DeviationRow {
    pub theta: Vec<f64>,
    /// L1 deviation of W Σ(θ) Wᵀ from the identity over the full lower
    /// triangle including the diagonal.
    pub l1_total: f64,
    /// The same deviation over off-diagonal entries only.
    pub l1_offdiag: f64,
}

/// How far a whitening matrix estimated at `theta_true` drifts from
/// whitening the model's analytic covariance at other parameter values.
/// Entirely deterministic: no simulation is involved.
pub fn whitening_deviation_study(
    model: &dyn Model,
    theta_true: &[f64],
    method: WhiteningMethod,
    theta_draws: &[Vec<f64>],
) -> Result<Vec<DeviationRow>, DiagnosticsError> {
    let cov_true = model.analytic_cov(theta_true)?;
    let w = compute_whitening(&cov_true, method)?;
    let mut rows = Vec::with_capacity(theta_draws.len());
    for theta in theta_draws {
        if !model.prior().contains(theta) {
            return Err(DiagnosticsError::Model(ModelError::OutOfSupport {
                detail: format!("deviation-study draw {theta:?} is outside the prior support"),
            }));
        }
        let cov = model.analytic_cov(theta)?;
        rows.push(DeviationRow {
            theta: theta.clone(),
            l1_total: deviation_l1(&w, &cov, true)?,
            l1_offdiag: deviation_l1(&w, &cov, false)?,
        });
    }
    Ok(rows)
}

/// Settings shared by every cell of a sensitivity sweep.
#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub method: WhiteningMethod,
    /// Simulations for estimating the whitening matrix at each θ⁰.
    pub n_cov: usize,
    /// Simulations per likelihood estimate inside the chains.
    pub n_draws: usize,
    pub shrinkage: ShrinkageSpec,
    pub iterations: usize,
    pub burn_in: usize,
    pub proposal: ProposalSpec,
    /// Start of the exact-likelihood reference chain.
    pub reference_start: Vec<f64>,
    pub seed: u64,
}

/// One sweep cell: the whitening-estimation point, the chain's acceptance
/// rate, and the total-variation distances against the reference chain.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub theta0: Vec<f64>,
    pub acceptance_rate: f64,
    pub tv: Vec<PairTv>,
}

impl SweepRow {
    pub fn mean_tv(&self) -> f64 {
        self.tv.iter().map(|p| p.tv).sum::<f64>() / self.tv.len() as f64
    }
}

/// For each whitening-estimation point θ⁰: estimate the transform there,
/// run a synthetic-likelihood chain, and measure its posterior's total-
/// variation distance from an exact-likelihood reference chain.
pub fn sensitivity_sweep(
    model: &dyn Model,
    s_obs: &[f64],
    theta0_list: &[Vec<f64>],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>, DiagnosticsError> {
    if theta0_list.is_empty() {
        return Ok(Vec::new());
    }
    if settings.iterations <= settings.burn_in + 100 {
        return Err(DiagnosticsError::BadSpec(format!(
            "{} iterations leave too few draws after a warm-up of {}",
            settings.iterations, settings.burn_in
        )));
    }
    let root = Stream::root(settings.seed);
    let reference = run_exact_chain(
        model,
        s_obs,
        &settings.reference_start,
        settings.iterations,
        root.child(0).to_seed(),
        &settings.proposal,
    )?;
    let reference_draws = chain_draws(&reference, settings.burn_in);

    let mut rows = Vec::with_capacity(theta0_list.len());
    for (idx, theta0) in theta0_list.iter().enumerate() {
        let cell = root.child(idx as u64 + 1);
        let est = estimate_whitening_at(model, theta0, settings.n_cov, settings.method, cell.child(0))?;
        let config = SamplerConfig {
            iterations: settings.iterations,
            burn_in: settings.burn_in,
            n_draws: settings.n_draws,
            shrinkage: settings.shrinkage,
            whitening: Some(est.matrix),
            initial_mean: Some(est.whitened_mean),
            theta0: theta0.clone(),
            seed: cell.child(1).to_seed(),
        };
        let chain = run_chain(model, s_obs, &config, &settings.proposal)?;
        let draws = chain_draws(&chain, settings.burn_in);
        rows.push(SweepRow {
            theta0: theta0.clone(),
            acceptance_rate: chain.acceptance_rate,
            tv: chain_tv(&draws, &reference_draws)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Ma2Model;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_samples(m: usize, mean: f64, sd: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = Stream::root(seed).child(0).rng();
        (0..m)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                vec![mean + sd * z]
            })
            .collect()
    }

    fn normal_samples_2d(m: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = Stream::root(seed).child(0).rng();
        (0..m)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                vec![a, b]
            })
            .collect()
    }

    #[test]
    fn kde_matches_the_standard_normal_density_at_zero() {
        let samples = normal_samples(100_000, 0.0, 1.0, 41);
        let grid = kde_estimate(&samples, &[0], None).unwrap();
        let at_zero = grid.value_near(&[0.0]);
        assert!(
            (at_zero - 0.3989).abs() < 0.01,
            "density at 0 is {at_zero}"
        );
        assert!((grid.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kde_rejects_degenerate_and_tiny_inputs() {
        let constant: Vec<Vec<f64>> = vec![vec![2.5]; 500];
        assert!(matches!(
            kde_estimate(&constant, &[0], None),
            Err(DiagnosticsError::DegenerateSamples { coordinate: 0 })
        ));
        let few = normal_samples(50, 0.0, 1.0, 42);
        assert!(matches!(
            kde_estimate(&few, &[0], None),
            Err(DiagnosticsError::TooFewSamples { .. })
        ));
        let ok = normal_samples(500, 0.0, 1.0, 43);
        assert!(kde_estimate(&ok, &[1], None).is_err()); // no such coordinate
        assert!(kde_estimate(&ok, &[0, 0], None).is_err()); // repeated coordinate
    }

    #[test]
    fn two_dimensional_kde_normalizes_and_peaks_at_the_mode() {
        let samples = normal_samples_2d(20_000, 44);
        let grid = kde_estimate(&samples, &[0, 1], None).unwrap();
        assert!((grid.integral() - 1.0).abs() < 1e-3);
        let peak = grid.value_near(&[0.0, 0.0]);
        // Bivariate standard normal has density 1/(2π) ≈ 0.159 at the mode.
        assert!((peak - 0.159).abs() < 0.02, "density at the mode is {peak}");
    }

    #[test]
    fn tv_distance_hits_the_analytic_landmarks() {
        let a = normal_samples(100_000, 0.0, 1.0, 45);
        let same = kde_estimate(&a, &[0], None).unwrap();
        assert_eq!(tv_distance(&same, &same).unwrap(), 0.0);

        // Disjoint supports: distance 1.
        let left = normal_samples(50_000, -10.0, 1.0, 46);
        let right = normal_samples(50_000, 10.0, 1.0, 47);
        let axes = shared_axes(&left, &right, &[0]).unwrap();
        let fl = kde_estimate(&left, &[0], Some(&axes)).unwrap();
        let fr = kde_estimate(&right, &[0], Some(&axes)).unwrap();
        let tv = tv_distance(&fl, &fr).unwrap();
        assert!((tv - 1.0).abs() < 1e-3, "disjoint tv = {tv}");

        // Unit-variance normals one standard deviation apart:
        // tv = 2Φ(1/2) − 1 ≈ 0.3829.
        let b = normal_samples(100_000, 1.0, 1.0, 48);
        let tv = univariate_tv(&a, &b, 0).unwrap();
        assert!((tv - 0.3829).abs() < 0.02, "shifted tv = {tv}");

        // Mismatched grids are refused.
        let other = kde_estimate(&b, &[0], None).unwrap();
        assert!(matches!(
            tv_distance(&same, &other),
            Err(DiagnosticsError::GridMismatch)
        ));
    }

    #[test]
    fn pairwise_tv_vanishes_for_identical_chains_and_stays_small_for_shared_targets() {
        let a = normal_samples_2d(50_000, 49);
        let identical = pairwise_tv(&a, &a).unwrap();
        assert_eq!(identical.len(), 1);
        assert_eq!((identical[0].i, identical[0].j), (0, 1));
        assert!(identical[0].tv < 0.02);

        let b = normal_samples_2d(50_000, 50);
        let independent = pairwise_tv(&a, &b).unwrap();
        assert!(
            independent[0].tv < 0.05,
            "same-target chains at tv = {}",
            independent[0].tv
        );

        // p = 1 is handled by the chain-level wrapper.
        let u = normal_samples(5_000, 0.0, 1.0, 51);
        let v = normal_samples(5_000, 0.0, 1.0, 52);
        let single = chain_tv(&u, &v).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single[0].tv < 0.05);
    }

    #[test]
    fn variance_study_reproduces_the_scaling_inequality() {
        let theta = [0.5, 0.1];
        // Fixed n = 40 at d = 20: the diagonal estimator is much less
        // variable than the full one.
        let rows = variance_study(&theta, &[20], NRule::Fixed(40), 150, Stream::root(60).child(0))
            .unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].var_full >= 0.0 && rows[0].var_diag >= 0.0);
        assert!(
            rows[0].var_diag <= rows[0].var_full,
            "diag {} > full {}",
            rows[0].var_diag,
            rows[0].var_full
        );

        // The condition n > d + 4 is enforced.
        assert!(matches!(
            variance_study(&theta, &[10], NRule::Fixed(14), 150, Stream::root(61).child(0)),
            Err(DiagnosticsError::VarianceCondition { d: 10, n: 14 })
        ));
        assert!(matches!(
            variance_study(&theta, &[10], NRule::Fixed(20), 50, Stream::root(62).child(0)),
            Err(DiagnosticsError::BadSpec(_))
        ));
    }

    #[test]
    fn variance_is_flat_under_the_matched_schedules() {
        let theta = [0.5, 0.1];
        let d_list = [5usize, 10, 20];
        // n ∝ d² keeps the full estimator's variance flat.
        let rows = variance_study(
            &theta,
            &d_list,
            NRule::PerDSquared(2),
            300,
            Stream::root(63).child(0),
        )
        .unwrap();
        let fulls: Vec<f64> = rows.iter().map(|r| r.var_full).collect();
        let ratio = fulls.iter().cloned().fold(0.0f64, f64::max)
            / fulls.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratio < 3.0, "full variances {fulls:?} under n = 2d²");

        // n ∝ d keeps the diagonal estimator's variance flat.
        let rows = variance_study(
            &theta,
            &d_list,
            NRule::PerD(10),
            300,
            Stream::root(64).child(0),
        )
        .unwrap();
        let diags: Vec<f64> = rows.iter().map(|r| r.var_diag).collect();
        let ratio = diags.iter().cloned().fold(0.0f64, f64::max)
            / diags.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratio < 3.0, "diag variances {diags:?} under n = 10d");
    }

    #[test]
    fn deviation_study_is_exact_at_the_estimation_point_and_grows_along_rays() {
        let model = Ma2Model::new(50).unwrap();
        let theta_true = vec![0.6, 0.2];
        for method in WhiteningMethod::ALL {
            let at_true =
                whitening_deviation_study(&model, &theta_true, method, &[theta_true.clone()])
                    .unwrap();
            assert!(at_true[0].l1_total < 1e-6, "{method}: {}", at_true[0].l1_total);
            assert!(at_true[0].l1_offdiag < 1e-6);

            // Walk a ray from θ_true toward (0.9, 0.05); deviations grow.
            let ray: Vec<Vec<f64>> = (0..10)
                .map(|s| {
                    let t = s as f64 / 9.0;
                    vec![0.6 + 0.3 * t, 0.2 - 0.15 * t]
                })
                .collect();
            let rows = whitening_deviation_study(&model, &theta_true, method, &ray).unwrap();
            for w in rows.windows(2) {
                assert!(
                    w[1].l1_total >= w[0].l1_total - 1e-9,
                    "{method}: deviation fell from {} to {}",
                    w[0].l1_total,
                    w[1].l1_offdiag
                );
            }
        }

        // Draws outside the support are refused.
        assert!(whitening_deviation_study(
            &model,
            &theta_true,
            WhiteningMethod::Pca,
            &[vec![2.0, 2.0]],
        )
        .is_err());
    }

    #[test]
    fn deviation_study_is_deterministic() {
        let model = Ma2Model::new(30).unwrap();
        let draws: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![0.3 + 0.02 * i as f64, 0.1])
            .collect();
        let a = whitening_deviation_study(&model, &[0.6, 0.2], WhiteningMethod::ZcaCor, &draws)
            .unwrap();
        let b = whitening_deviation_study(&model, &[0.6, 0.2], WhiteningMethod::ZcaCor, &draws)
            .unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.l1_total.to_bits(), rb.l1_total.to_bits());
            assert_eq!(ra.l1_offdiag.to_bits(), rb.l1_offdiag.to_bits());
        }
    }

    #[test]
    fn empty_sweep_reports_nothing() {
        let model = Ma2Model::new(20).unwrap();
        let settings = SweepSettings {
            method: WhiteningMethod::Pca,
            n_cov: 200,
            n_draws: 40,
            shrinkage: ShrinkageSpec::Warton { gamma: 0.5 },
            iterations: 500,
            burn_in: 100,
            proposal: ProposalSpec::diagonal(&[0.1, 0.1]).unwrap(),
            reference_start: vec![0.6, 0.2],
            seed: 70,
        };
        let rows = sensitivity_sweep(&model, &vec![0.0; 20], &[], &settings).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn sweep_is_stable_across_seeds_at_a_good_estimation_point() {
        let model = crate::models::Ar1Model::new(30).unwrap();
        let theta_true = vec![0.6];
        let mut obs_rng = Stream::root(71).child(9).rng();
        let s_obs = model.simulate_summaries(&theta_true, &mut obs_rng).unwrap();
        let base = SweepSettings {
            method: WhiteningMethod::Pca,
            n_cov: 2_000,
            n_draws: 120,
            shrinkage: ShrinkageSpec::Warton { gamma: 1.0 },
            iterations: 4_000,
            burn_in: 500,
            proposal: ProposalSpec::diagonal(&[0.08]).unwrap(),
            reference_start: theta_true.clone(),
            seed: 72,
        };
        let first = sensitivity_sweep(&model, &s_obs, &[theta_true.clone()], &base).unwrap();
        let mut reseeded = base.clone();
        reseeded.seed = 73;
        let second = sensitivity_sweep(&model, &s_obs, &[theta_true.clone()], &reseeded).unwrap();
        let (t1, t2) = (first[0].mean_tv(), second[0].mean_tv());
        assert!(
            (t1 - t2).abs() < 0.05,
            "sweep TVs across seeds: {t1} vs {t2}"
        );
        // A chain anchored at the truth tracks the exact posterior closely.
        assert!(t1 < 0.2, "tv at the true parameter: {t1}");
    }
}
