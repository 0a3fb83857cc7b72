//! Whitening transforms for summary-statistic covariances.
//!
//! A whitening matrix `W` for a covariance `Sigma` satisfies
//! `W Sigma W^T = I`, equivalently `W^T W = Sigma^{-1}`. That constraint
//! leaves a rotational freedom, and the five constructions here pick
//! different representatives:
//!
//! * `zca`      — `Sigma^{-1/2}` (closest to the identity),
//! * `pca`      — `Lambda^{-1/2} U^T` (principal-component scores),
//! * `zca-cor`  — `P^{-1/2} V^{-1/2}` (correlation-based ZCA),
//! * `pca-cor`  — `Xi^{-1/2} G^T V^{-1/2}` (principal components of the
//!   correlation matrix),
//! * `cholesky` — `L^T` where `Sigma^{-1} = L L^T` with `L` lower triangular.
//!
//! Here `Sigma = V^{1/2} P V^{1/2} = U Lambda U^T` and `P = G Xi G^T`, with
//! all eigendecompositions in the canonical order/sign convention of
//! [`crate::linalg::spectral_decompose`], so the transform produced for a
//! given covariance is bitwise reproducible.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::format_f64;
use crate::linalg::{
    cholesky_lower, spectral_decompose, LinalgError, SpectralDecomposition, SymmetricMatrix,
};

/// Absolute tolerance for the `W Sigma W^T = I` construction check.
pub const WHITENING_EXACTNESS_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum WhiteningError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("coordinate {index} has non-positive variance {value:e}; correlation-based whitening needs strictly positive variances")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("dimension mismatch: whitening is {expected}-dimensional, input is {actual}-dimensional")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("whitening construction failed its exactness check (max |W S W^T - I| = {max_error:e}); the covariance is too ill-conditioned")]
    ExactnessCheckFailed { max_error: f64 },
    #[error("invalid whitening matrix document: {0}")]
    InvalidFormat(String),
}

/// The five supported whitening constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WhiteningMethod {
    #[serde(rename = "zca")]
    Zca,
    #[serde(rename = "zca-cor")]
    ZcaCor,
    #[serde(rename = "pca")]
    Pca,
    #[serde(rename = "pca-cor")]
    PcaCor,
    #[serde(rename = "cholesky")]
    Cholesky,
}

impl WhiteningMethod {
    pub const ALL: [WhiteningMethod; 5] = [
        WhiteningMethod::Zca,
        WhiteningMethod::ZcaCor,
        WhiteningMethod::Pca,
        WhiteningMethod::PcaCor,
        WhiteningMethod::Cholesky,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WhiteningMethod::Zca => "zca",
            WhiteningMethod::ZcaCor => "zca-cor",
            WhiteningMethod::Pca => "pca",
            WhiteningMethod::PcaCor => "pca-cor",
            WhiteningMethod::Cholesky => "cholesky",
        }
    }
}

impl std::fmt::Display for WhiteningMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for WhiteningMethod {
    type Err = WhiteningError;
    fn from_str(s: &str) -> Result<Self, WhiteningError> {
        WhiteningMethod::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                WhiteningError::InvalidFormat(format!(
                    "unknown whitening method {s:?} (expected one of zca, zca-cor, pca, pca-cor, cholesky)"
                ))
            })
    }
}

/// A concrete whitening transform, with provenance of how it was estimated.
#[derive(Clone, Debug, PartialEq)]
pub struct WhiteningMatrix {
    method: WhiteningMethod,
    w: DMatrix<f64>,
    /// Parameter value the covariance was estimated at, when known.
    pub source_theta: Option<Vec<f64>>,
    /// Number of simulated summaries behind the covariance estimate, when known.
    pub n_cov: Option<usize>,
}

impl WhiteningMatrix {
    pub fn method(&self) -> WhiteningMethod {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Whiten a single summary vector: `W s`.
    pub fn whiten_vec(&self, s: &[f64]) -> Result<Vec<f64>, WhiteningError> {
        if s.len() != self.dim() {
            return Err(WhiteningError::DimensionMismatch {
                expected: self.dim(),
                actual: s.len(),
            });
        }
        Ok(crate::linalg::mat_vec(&self.w, s))
    }

    /// Serialize to the interchange JSON document. Entries are row-major
    /// with 17 significant digits, so parsing recovers the exact matrix.
    pub fn to_json(&self) -> String {
        let d = self.dim();
        let mut out = String::with_capacity(32 * d * d + 128);
        out.push_str("{\"method\":\"");
        out.push_str(self.method.as_str());
        out.push_str("\",\"dim\":");
        out.push_str(&d.to_string());
        out.push_str(",\"entries\":[");
        for i in 0..d {
            for j in 0..d {
                if i + j > 0 {
                    out.push(',');
                }
                out.push_str(&format_f64(self.w[(i, j)]));
            }
        }
        out.push_str("],\"source_theta\":");
        match &self.source_theta {
            None => out.push_str("null"),
            Some(theta) => {
                out.push('[');
                for (k, v) in theta.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    out.push_str(&format_f64(*v));
                }
                out.push(']');
            }
        }
        out.push_str(",\"n_cov\":");
        match self.n_cov {
            None => out.push_str("null"),
            Some(n) => out.push_str(&n.to_string()),
        }
        out.push_str("}\n");
        out
    }

    /// Parse the interchange JSON document produced by [`Self::to_json`].
    pub fn from_json(text: &str) -> Result<Self, WhiteningError> {
        #[derive(Deserialize)]
        struct Doc {
            method: WhiteningMethod,
            dim: usize,
            entries: Vec<f64>,
            #[serde(default)]
            source_theta: Option<Vec<f64>>,
            #[serde(default)]
            n_cov: Option<usize>,
        }
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| WhiteningError::InvalidFormat(e.to_string()))?;
        if doc.dim == 0 {
            return Err(WhiteningError::InvalidFormat("dim must be positive".into()));
        }
        if doc.entries.len() != doc.dim * doc.dim {
            return Err(WhiteningError::InvalidFormat(format!(
                "expected {} entries for dim {}, got {}",
                doc.dim * doc.dim,
                doc.dim,
                doc.entries.len()
            )));
        }
        if let Some(bad) = doc.entries.iter().find(|v| !v.is_finite()) {
            return Err(WhiteningError::InvalidFormat(format!(
                "non-finite entry {bad}"
            )));
        }
        if doc
            .source_theta
            .as_ref()
            .is_some_and(|t| t.iter().any(|v| !v.is_finite()))
        {
            return Err(WhiteningError::InvalidFormat(
                "non-finite source_theta entry".into(),
            ));
        }
        let w = DMatrix::from_row_iterator(doc.dim, doc.dim, doc.entries.iter().copied());
        Ok(WhiteningMatrix {
            method: doc.method,
            w,
            source_theta: doc.source_theta,
            n_cov: doc.n_cov,
        })
    }
}

/// PCA-style factor for a decomposition: `Lambda^{-1/2} Q^T`.
fn pca_factor(dec: &SpectralDecomposition) -> DMatrix<f64> {
    let mut m = dec.vectors().transpose();
    for (k, mut row) in m.row_iter_mut().enumerate() {
        row *= 1.0 / dec.eigenvalues()[k].sqrt();
    }
    m
}

/// Scale column `j` of `m` by `s[j]` (right-multiplication by `diag(s)`).
fn scale_columns(mut m: DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col *= s[j];
    }
    m
}

/// Compute the whitening matrix of `cov` for the requested method.
///
/// Eigenvalues are floored per [`crate::linalg::EIGENVALUE_FLOOR_REL`] to
/// repair roundoff-scale negatives; the construction is then verified
/// against the repaired covariance (`max |W S W^T - I|` below
/// [`WHITENING_EXACTNESS_TOL`]), so covariances that are singular beyond
/// that repair fail loudly rather than whiten garbage.
pub fn compute_whitening(
    cov: &SymmetricMatrix,
    method: WhiteningMethod,
) -> Result<WhiteningMatrix, WhiteningError> {
    let d = cov.dim();
    let (w, effective_cov) = match method {
        WhiteningMethod::Zca | WhiteningMethod::Pca | WhiteningMethod::Cholesky => {
            let dec = spectral_decompose(cov)?.floor_eigenvalues()?;
            let w = match method {
                WhiteningMethod::Zca => dec.map_eigenvalues(|l| 1.0 / l.sqrt()).into_matrix(),
                WhiteningMethod::Pca => pca_factor(&dec),
                WhiteningMethod::Cholesky => {
                    let precision = dec.map_eigenvalues(|l| 1.0 / l);
                    cholesky_lower(&precision)?.transpose()
                }
                _ => unreachable!(),
            };
            (w, dec.reconstruct())
        }
        WhiteningMethod::ZcaCor | WhiteningMethod::PcaCor => {
            let variances = cov.diagonal();
            for (i, &v) in variances.iter().enumerate() {
                if !(v > 0.0) {
                    return Err(WhiteningError::NonPositiveVariance { index: i, value: v });
                }
            }
            let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
            let corr = SymmetricMatrix::from_fn(d, |i, j| {
                if i == j {
                    1.0
                } else {
                    cov[(i, j)] / (sd[i] * sd[j])
                }
            })?;
            let pdec = spectral_decompose(&corr)?.floor_eigenvalues()?;
            let core = match method {
                WhiteningMethod::ZcaCor => {
                    pdec.map_eigenvalues(|l| 1.0 / l.sqrt()).into_matrix()
                }
                WhiteningMethod::PcaCor => pca_factor(&pdec),
                _ => unreachable!(),
            };
            let inv_sd: Vec<f64> = sd.iter().map(|s| 1.0 / s).collect();
            let w = scale_columns(core, &inv_sd);
            // The covariance this construction whitens exactly: repaired
            // correlation re-scaled by the observed standard deviations.
            let repaired = pdec.reconstruct();
            let effective =
                SymmetricMatrix::from_fn(d, |i, j| repaired[(i, j)] * sd[i] * sd[j])?;
            (w, effective)
        }
    };

    let sandwich = &w * effective_cov.matrix() * w.transpose();
    let mut max_error = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            max_error = max_error.max((sandwich[(i, j)] - target).abs());
        }
    }
    if max_error > WHITENING_EXACTNESS_TOL {
        return Err(WhiteningError::ExactnessCheckFailed { max_error });
    }

    Ok(WhiteningMatrix {
        method,
        w,
        source_theta: None,
        n_cov: None,
    })
}

/// Apply a whitening transform to draws stored one per row: `S W^T`.
pub fn whiten_rows(
    rows: &DMatrix<f64>,
    w: &WhiteningMatrix,
) -> Result<DMatrix<f64>, WhiteningError> {
    if rows.ncols() != w.dim() {
        return Err(WhiteningError::DimensionMismatch {
            expected: w.dim(),
            actual: rows.ncols(),
        });
    }
    Ok(rows * w.matrix().transpose())
}

/// L1 norm of the deviation of `W cov W^T` from the identity.
///
/// With `include_diagonal`, sums `|m[i][j] - delta[i][j]|` over the upper
/// triangle including the diagonal; otherwise sums the absolute off-diagonal
/// entries only (deviation from the zero matrix above the diagonal).
pub fn deviation_l1(
    w: &WhiteningMatrix,
    cov: &SymmetricMatrix,
    include_diagonal: bool,
) -> Result<f64, WhiteningError> {
    if cov.dim() != w.dim() {
        return Err(WhiteningError::DimensionMismatch {
            expected: w.dim(),
            actual: cov.dim(),
        });
    }
    let m = w.matrix() * cov.matrix() * w.matrix().transpose();
    let d = w.dim();
    let mut total = 0.0;
    for i in 0..d {
        if include_diagonal {
            total += (m[(i, i)] - 1.0).abs();
        }
        for j in (i + 1)..d {
            total += m[(i, j)].abs();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_vec;
    use crate::stream::Stream;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn random_spd(dim: usize, stream: Stream) -> SymmetricMatrix {
        let mut rng = stream.rng();
        let rows = dim + 5;
        let g = DMatrix::from_fn(rows, dim, |_, _| StandardNormal.sample(&mut rng));
        SymmetricMatrix::new(g.transpose() * &g / rows as f64).unwrap()
    }

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn identity_covariance_gives_identity_transform() {
        let cov = SymmetricMatrix::identity(3);
        for method in WhiteningMethod::ALL {
            let w = compute_whitening(&cov, method).unwrap();
            assert!(
                max_abs_diff(w.matrix(), &DMatrix::identity(3, 3)) < 1e-12,
                "{method} of identity should be identity"
            );
        }
    }

    #[test]
    fn diagonal_covariance_zca_and_pca() {
        let cov = SymmetricMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let zca = compute_whitening(&cov, WhiteningMethod::Zca).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0 / 3.0]);
        assert!(max_abs_diff(zca.matrix(), &expect) < 1e-12);

        // PCA orders rows by descending eigenvalue, so coordinates permute.
        let pca = compute_whitening(&cov, WhiteningMethod::Pca).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / 3.0, 0.5, 0.0]);
        assert!(max_abs_diff(pca.matrix(), &expect) < 1e-12);
    }

    #[test]
    fn exchangeable_two_by_two_zca() {
        let cov = SymmetricMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 }).unwrap();
        let w = compute_whitening(&cov, WhiteningMethod::Zca).unwrap();
        // Sigma^{-1/2} for [[2,1],[1,2]].
        let diag = 0.5 / 3.0f64.sqrt() + 0.5;
        let off = 0.5 / 3.0f64.sqrt() - 0.5;
        assert_relative_eq!(w.matrix()[(0, 0)], diag, epsilon = 1e-12);
        assert_relative_eq!(w.matrix()[(0, 1)], off, epsilon = 1e-12);
        assert_relative_eq!(w.matrix()[(1, 0)], off, epsilon = 1e-12);
        assert_relative_eq!(w.matrix()[(1, 1)], diag, epsilon = 1e-12);
        // Frozen decimal values for the same entries.
        assert_relative_eq!(w.matrix()[(0, 0)], 0.788675, epsilon = 1e-6);
        assert_relative_eq!(w.matrix()[(0, 1)], -0.211325, epsilon = 1e-6);
    }

    #[test]
    fn every_method_whitens_exactly() {
        for dim in 1..=8usize {
            let cov = random_spd(dim, Stream::root(31).child(dim as u64));
            let inv = spectral_decompose(&cov)
                .unwrap()
                .floor_eigenvalues()
                .unwrap()
                .map_eigenvalues(|l| 1.0 / l);
            for method in WhiteningMethod::ALL {
                let w = compute_whitening(&cov, method).unwrap();
                let sandwich = w.matrix() * cov.matrix() * w.matrix().transpose();
                assert!(
                    max_abs_diff(&sandwich, &DMatrix::identity(dim, dim)) < 1e-8,
                    "{method} failed W S W^T = I at dim {dim}"
                );
                // The defining constraint: W^T W = Sigma^{-1}, to relative
                // precision of the inverse's largest entry.
                let wtw = w.matrix().transpose() * w.matrix();
                let scale = inv.max_abs();
                assert!(
                    max_abs_diff(&wtw, inv.matrix()) < 1e-6 * scale,
                    "{method} failed W^T W = Sigma^inv at dim {dim}"
                );
            }
        }
    }

    #[test]
    fn methods_differ_but_agree_on_constraint() {
        let cov = random_spd(4, Stream::root(77).child(0));
        let zca = compute_whitening(&cov, WhiteningMethod::Zca).unwrap();
        let pca = compute_whitening(&cov, WhiteningMethod::Pca).unwrap();
        assert!(
            max_abs_diff(zca.matrix(), pca.matrix()) > 1e-3,
            "distinct constructions should pick distinct representatives"
        );
    }

    #[test]
    fn scalar_covariance_all_methods_reduce_to_reciprocal_sd() {
        let cov = SymmetricMatrix::from_diagonal(&[6.25]).unwrap();
        for method in WhiteningMethod::ALL {
            let w = compute_whitening(&cov, method).unwrap();
            assert_relative_eq!(w.matrix()[(0, 0)], 1.0 / 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn cholesky_factor_is_upper_triangular() {
        let cov = random_spd(5, Stream::root(13).child(2));
        let w = compute_whitening(&cov, WhiteningMethod::Cholesky).unwrap();
        for i in 1..5 {
            for j in 0..i {
                assert_eq!(w.matrix()[(i, j)], 0.0, "W = L^T must be upper triangular");
            }
        }
    }

    #[test]
    fn correlation_methods_reject_zero_variance() {
        let cov = SymmetricMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        for method in [WhiteningMethod::ZcaCor, WhiteningMethod::PcaCor] {
            assert!(matches!(
                compute_whitening(&cov, method),
                Err(WhiteningError::NonPositiveVariance { index: 1, .. })
            ));
        }
    }

    #[test]
    fn singular_covariance_is_rejected() {
        let cov = SymmetricMatrix::from_diagonal(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            compute_whitening(&cov, WhiteningMethod::Zca),
            Err(WhiteningError::Linalg(LinalgError::Singular { .. }))
        ));
    }

    #[test]
    fn construction_is_bitwise_deterministic() {
        let cov = random_spd(6, Stream::root(99).child(1));
        for method in WhiteningMethod::ALL {
            let a = compute_whitening(&cov, method).unwrap();
            let b = compute_whitening(&cov, method).unwrap();
            assert_eq!(a.matrix(), b.matrix(), "{method} not deterministic");
        }
    }

    #[test]
    fn whiten_rows_checks_dimensions_and_maps_rows() {
        let cov = random_spd(3, Stream::root(55).child(0));
        let w = compute_whitening(&cov, WhiteningMethod::Zca).unwrap();
        let rows = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let out = whiten_rows(&rows, &w).unwrap();
        // Row i of the output is W applied to row i of the input.
        let first = mat_vec(w.matrix(), &[1.0, 0.0, 0.0]);
        for j in 0..3 {
            assert_relative_eq!(out[(0, j)], first[j], epsilon = 1e-14);
        }
        let bad = DMatrix::zeros(2, 4);
        assert!(matches!(
            whiten_rows(&bad, &w),
            Err(WhiteningError::DimensionMismatch { expected: 3, actual: 4 })
        ));
    }

    #[test]
    fn whitened_draws_have_identity_sample_covariance() {
        // Monte Carlo check that whitening does what it claims on data:
        // draws from N(0, Sigma) mapped by W have sample covariance near I.
        let dim = 3;
        let cov = SymmetricMatrix::from_fn(dim, |i, j| {
            if i == j {
                1.5 + i as f64
            } else {
                0.7 / (1.0 + (i as f64 - j as f64).abs())
            }
        })
        .unwrap();
        let l = cholesky_lower(&cov).unwrap();
        let w = compute_whitening(&cov, WhiteningMethod::PcaCor).unwrap();
        let n = 1_000_000usize;
        let mut rng = Stream::root(2024).child(0).rng();
        let mut sums = vec![0.0f64; dim];
        let mut prods = vec![0.0f64; dim * dim];
        for _ in 0..n {
            let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x = mat_vec(&l, &z);
            let y = w.whiten_vec(&x).unwrap();
            for i in 0..dim {
                sums[i] += y[i];
                for j in 0..dim {
                    prods[i * dim + j] += y[i] * y[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                let mean_i = sums[i] / n as f64;
                let mean_j = sums[j] / n as f64;
                let c = prods[i * dim + j] / n as f64 - mean_i * mean_j;
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (c - expect).abs() < 0.005,
                    "whitened covariance entry ({i}, {j}) = {c}"
                );
            }
        }
    }

    #[test]
    fn deviation_l1_examples() {
        let w = WhiteningMatrix {
            method: WhiteningMethod::Zca,
            w: DMatrix::identity(2, 2),
            source_theta: None,
            n_cov: None,
        };
        let cov = SymmetricMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        assert_relative_eq!(deviation_l1(&w, &cov, true).unwrap(), 2.0, epsilon = 1e-14);
        let cov = SymmetricMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.5 }).unwrap();
        assert_relative_eq!(deviation_l1(&w, &cov, false).unwrap(), 0.5, epsilon = 1e-14);
        // A transform built for this covariance deviates by zero.
        let built = compute_whitening(&cov, WhiteningMethod::Cholesky).unwrap();
        assert!(deviation_l1(&built, &cov, true).unwrap() < 1e-10);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let cov = random_spd(4, Stream::root(404).child(7));
        let mut w = compute_whitening(&cov, WhiteningMethod::PcaCor).unwrap();
        w.source_theta = Some(vec![0.6, 0.2]);
        w.n_cov = Some(20_000);
        let text = w.to_json();
        let back = WhiteningMatrix::from_json(&text).unwrap();
        assert_eq!(back.method(), w.method());
        assert_eq!(back.source_theta, w.source_theta);
        assert_eq!(back.n_cov, w.n_cov);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(
                    back.matrix()[(i, j)].to_bits(),
                    w.matrix()[(i, j)].to_bits(),
                    "entry ({i}, {j}) not bit-exact"
                );
            }
        }
        // Double round trip is textually stable.
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn json_rejects_malformed_documents() {
        assert!(WhiteningMatrix::from_json("not json").is_err());
        assert!(WhiteningMatrix::from_json(
            r#"{"method":"zca","dim":2,"entries":[1.0,0.0,0.0],"source_theta":null,"n_cov":null}"#
        )
        .is_err());
        assert!(WhiteningMatrix::from_json(
            r#"{"method":"svd","dim":1,"entries":[1.0],"source_theta":null,"n_cov":null}"#
        )
        .is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for method in WhiteningMethod::ALL {
            let parsed: WhiteningMethod = method.as_str().parse().unwrap();
            assert_eq!(parsed, method);
        }
        assert!("zca_cor".parse::<WhiteningMethod>().is_err());
    }
}
