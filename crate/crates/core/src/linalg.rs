//! Dense symmetric-matrix helpers.
//!
//! Covariance handling everywhere else in the crate goes through the
//! [`SymmetricMatrix`] wrapper (validated at construction) and the spectral
//! routines here, which pin down an exact ordering and sign convention so
//! that identical inputs always produce bitwise-identical factors.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative tolerance for the symmetry check at construction.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Eigenvalues below `EIGENVALUE_FLOOR_REL * lambda_max` are raised to that
/// floor before inversion or square roots. This repairs roundoff-scale
/// negative eigenvalues of nominally positive semi-definite matrices without
/// masking genuinely singular inputs (those fail the exactness checks of the
/// routines built on top).
pub const EIGENVALUE_FLOOR_REL: f64 = 1e-10;

/// Iteration cap for the symmetric eigenvalue solver.
const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Relative tolerance for the `Q diag(lambda) Q^T == A` reconstruction check.
const RECONSTRUCTION_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must be non-empty")]
    Empty,
    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error(
        "matrix is not symmetric: entries ({row}, {col}) and ({col}, {row}) differ by {diff:e}"
    )]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("eigenvalue decomposition did not converge within {EIGEN_MAX_ITERATIONS} iterations")]
    NoConvergence,
    #[error("matrix is singular beyond repair by eigenvalue flooring (largest eigenvalue {lambda_max:e})")]
    Singular { lambda_max: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// A square matrix guaranteed finite and symmetric.
///
/// Construction validates shape, finiteness, and symmetry to within
/// [`SYMMETRY_REL_TOL`] of the largest entry, then symmetrizes exactly so
/// downstream code can rely on `a[(i, j)] == a[(j, i)]` bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    m: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Validate and wrap a square matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(LinalgError::Empty);
        }
        let mut max_abs = 0.0f64;
        for (idx, &v) in m.iter().enumerate() {
            if !v.is_finite() {
                let row = idx % m.nrows();
                let col = idx / m.nrows();
                return Err(LinalgError::NonFinite { row, col, value: v });
            }
            max_abs = max_abs.max(v.abs());
        }
        let tol = SYMMETRY_REL_TOL * max_abs.max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > tol {
                    return Err(LinalgError::NotSymmetric { row: i, col: j, diff });
                }
            }
        }
        Ok(Self::mirror_upper(&m))
    }

    /// Wrap a matrix that is symmetric by construction.
    ///
    /// Only for internal callers that just built `m` from an upper triangle;
    /// the symmetry invariant is asserted in debug builds.
    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.nrows() == m.ncols() && m.nrows() > 0);
        debug_assert!((0..m.nrows())
            .all(|i| (0..m.ncols()).all(|j| m[(i, j)].to_bits() == m[(j, i)].to_bits())));
        SymmetricMatrix { m }
    }

    /// Build from the upper triangle of `m`, mirroring it onto the lower.
    fn mirror_upper(m: &DMatrix<f64>) -> Self {
        let d = m.nrows();
        let mut out = DMatrix::zeros(d, d);
        for i in 0..d {
            out[(i, i)] = m[(i, i)];
            for j in (i + 1)..d {
                // Average the two triangles so the result does not depend on
                // which one the caller filled, then mirror exactly.
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymmetricMatrix { m: out }
    }

    /// Symmetric matrix from a function of the index pair; `f` is evaluated
    /// once per unordered pair.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::Empty);
        }
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j, value: v });
                }
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(SymmetricMatrix { m })
    }

    pub fn identity(dim: usize) -> Self {
        SymmetricMatrix {
            m: DMatrix::identity(dim, dim),
        }
    }

    /// Diagonal matrix from the given variances (or any diagonal entries).
    pub fn from_diagonal(diag: &[f64]) -> Result<Self, LinalgError> {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)]).collect()
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| ((i + 1)..d).all(|j| self.m[(i, j)] == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.m[idx]
    }
}

/// Eigendecomposition of a symmetric matrix in a canonical form:
/// eigenvalues in descending order, and in each eigenvector the entry of
/// largest absolute value is positive (ties broken by lowest index).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, matching `eigenvalues`.
    vectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector columns, same order as [`Self::eigenvalues`].
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Q f(lambda) Q^T`, exactly symmetrized.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let d = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[k]);
        }
        let product = &scaled * self.vectors.transpose();
        let mut out = DMatrix::zeros(d, d);
        for i in 0..d {
            out[(i, i)] = product[(i, i)];
            for j in (i + 1)..d {
                let v = 0.5 * (product[(i, j)] + product[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymmetricMatrix::from_symmetric_unchecked(out)
    }

    /// Reconstruct the original matrix, `Q diag(lambda) Q^T`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.map_eigenvalues(|l| l)
    }

    /// Raise eigenvalues below `EIGENVALUE_FLOOR_REL * lambda_max` to that
    /// floor. Fails when the largest eigenvalue is not strictly positive, in
    /// which case no rescaling can make the matrix usable as a covariance.
    pub fn floor_eigenvalues(&self) -> Result<SpectralDecomposition, LinalgError> {
        let lambda_max = self.eigenvalues[0];
        if !(lambda_max > 0.0) {
            return Err(LinalgError::Singular { lambda_max });
        }
        let floor = EIGENVALUE_FLOOR_REL * lambda_max;
        Ok(SpectralDecomposition {
            eigenvalues: self.eigenvalues.iter().map(|&l| l.max(floor)).collect(),
            vectors: self.vectors.clone(),
        })
    }
}

/// Symmetric eigendecomposition with deterministic ordering and signs.
///
/// Eigenvalues are sorted in descending order (ties keep the solver's
/// relative order); each eigenvector is flipped, if necessary, so that its
/// entry of largest absolute value is positive, with ties broken by the
/// lowest index. The decomposition is validated by reconstructing the input
/// to within [`RECONSTRUCTION_REL_TOL`] of its largest entry.
pub fn spectral_decompose(a: &SymmetricMatrix) -> Result<SpectralDecomposition, LinalgError> {
    let d = a.dim();
    let eigen = nalgebra::SymmetricEigen::try_new(a.m.clone(), f64::EPSILON, EIGEN_MAX_ITERATIONS)
        .ok_or(LinalgError::NoConvergence)?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[j]
            .partial_cmp(&eigen.eigenvalues[i])
            .expect("eigenvalues of a finite symmetric matrix are finite")
    });

    let mut eigenvalues = Vec::with_capacity(d);
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(eigen.eigenvalues[src]);
        let col = eigen.eigenvectors.column(src);
        // Sign convention: largest-magnitude entry positive, ties to the
        // lowest index (the strict `>` keeps the first maximum while
        // scanning upward).
        let mut pivot = 0;
        for i in 1..d {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let flip = col[pivot] < 0.0;
        for i in 0..d {
            vectors[(i, dst)] = if flip { -col[i] } else { col[i] };
        }
    }

    let decomp = SpectralDecomposition { eigenvalues, vectors };
    let rebuilt = decomp.reconstruct();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut err = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            err = err.max((rebuilt.m[(i, j)] - a.m[(i, j)]).abs());
        }
    }
    if err > RECONSTRUCTION_REL_TOL * scale {
        return Err(LinalgError::NoConvergence);
    }
    Ok(decomp)
}

/// Lower-triangular Cholesky factor `L` with `L L^T = a`.
pub fn cholesky_lower(a: &SymmetricMatrix) -> Result<DMatrix<f64>, LinalgError> {
    nalgebra::Cholesky::new(a.m.clone())
        .map(|c| c.unpack())
        .ok_or(LinalgError::NotPositiveDefinite)
}

/// Log-density helper: solve `L z = rhs` in place for lower-triangular `L`.
pub fn forward_substitute(l: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let d = rhs.len();
    let mut z = vec![0.0; d];
    for i in 0..d {
        let mut s = rhs[i];
        for j in 0..i {
            s -= l[(i, j)] * z[j];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Convenience: matrix-vector product returning a `Vec`.
pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let x = DVector::from_column_slice(v);
    (m * x).iter().copied().collect()
}
