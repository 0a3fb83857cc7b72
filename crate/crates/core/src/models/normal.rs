//! Correlated normal toy model with a closed-form summary distribution.
//!
//! One observation is a single draw from `N_k(theta1 * 1, Psi + theta2 * I)`
//! where `Psi[i][j] = 0.5^{|i-j|}`. The summary statistic is the draw
//! itself. `Psi` is the covariance of a stationary first-order
//! autoregression with coefficient 0.5 and unit marginal variance, so a
//! draw costs O(k) rather than a dense factorization.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::SymmetricMatrix;
use crate::models::{ensure_in_support, Model, ModelError, Prior};
use crate::synthlik::gaussian_loglik;

pub struct NormalToyModel {
    k: usize,
    prior: Prior,
}

impl NormalToyModel {
    pub fn new(k: usize) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::InvalidSettings {
                detail: "dimension must be at least 1".to_string(),
            });
        }
        // theta1 flat on the real line, theta2 flat on positive reals: an
        // improper prior matching the stated support.
        let prior = Prior::uniform(vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY)]);
        Ok(NormalToyModel { k, prior })
    }

    pub fn analytic_mean(&self, theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        ensure_in_support(self, theta)?;
        Ok(vec![theta[0]; self.k])
    }
}

impl Model for NormalToyModel {
    fn name(&self) -> &'static str {
        "normal"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["theta1", "theta2"]
    }

    fn summary_dim(&self) -> usize {
        self.k
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
        let (t1, t2) = (theta[0], theta[1]);
        let noise_sd = t2.sqrt();
        // Correlated part: stationary AR with coefficient 0.5; innovation
        // variance 1 - 0.5^2 keeps the marginal variance at 1.
        let innovation_sd = 0.75f64.sqrt();
        let mut z: f64 = StandardNormal.sample(&mut *rng);
        let mut row = Vec::with_capacity(self.k);
        let noise: f64 = StandardNormal.sample(&mut *rng);
        row.push(t1 + z + noise_sd * noise);
        for _ in 1..self.k {
            let w: f64 = StandardNormal.sample(&mut *rng);
            z = 0.5 * z + innovation_sd * w;
            let noise: f64 = StandardNormal.sample(&mut *rng);
            row.push(t1 + z + noise_sd * noise);
        }
        Ok(vec![row])
    }

    fn summarize(&self, raw: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        if raw.len() != 1 || raw[0].len() != self.k {
            return Err(ModelError::WrongDataShape {
                detail: format!(
                    "expected one vector of length {}, got {} row(s) of length {}",
                    self.k,
                    raw.len(),
                    raw.first().map_or(0, Vec::len)
                ),
            });
        }
        Ok(raw[0].clone())
    }

    fn analytic_cov(&self, theta: &[f64]) -> Result<SymmetricMatrix, ModelError> {
        ensure_in_support(self, theta)?;
        let t2 = theta[1];
        Ok(SymmetricMatrix::from_fn(self.k, |i, j| {
            let base = 0.5f64.powi(i.abs_diff(j) as i32);
            if i == j {
                base + t2
            } else {
                base
            }
        })?)
    }

    fn analytic_loglik(&self, theta: &[f64], s_obs: &[f64]) -> Result<f64, ModelError> {
        let cov = self.analytic_cov(theta)?;
        let mean = self.analytic_mean(theta)?;
        Ok(gaussian_loglik(s_obs, &mean, &cov)?)
    }

    fn has_analytic_loglik(&self) -> bool {
        true
    }
}
