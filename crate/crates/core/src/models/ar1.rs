//! First-order autoregressive time series with unit innovation variance.
//!
//! `z_t = phi * z_{t-1} + w_t` for `t = 1..=t0`, initialized at the
//! stationary distribution `z_0 ~ N(0, 1/(1-phi^2))` so that the simulated
//! series matches the stationary covariance `phi^{|i-j|} / (1 - phi^2)`
//! used by the analytic likelihood. The summary statistic is the series.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::SymmetricMatrix;
use crate::models::{ensure_in_support, Model, ModelError, Prior};
use crate::synthlik::gaussian_loglik;

pub struct Ar1Model {
    t0: usize,
    prior: Prior,
}

impl Ar1Model {
    pub fn new(t0: usize) -> Result<Self, ModelError> {
        if t0 < 2 {
            return Err(ModelError::InvalidSettings {
                detail: format!("series length must be at least 2, got t0 = {t0}"),
            });
        }
        Ok(Ar1Model { t0, prior: Prior::uniform(vec![(-1.0, 1.0)]) })
    }
}

impl Model for Ar1Model {
    fn name(&self) -> &'static str {
        "ar1"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["phi"]
    }

    fn summary_dim(&self) -> usize {
        self.t0
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
        let phi = theta[0];
        let stationary_sd = (1.0 / (1.0 - phi * phi)).sqrt();
        let init: f64 = StandardNormal.sample(&mut *rng);
        let mut z = stationary_sd * init;
        let mut series = Vec::with_capacity(self.t0);
        for _ in 0..self.t0 {
            let w: f64 = StandardNormal.sample(&mut *rng);
            z = phi * z + w;
            series.push(z);
        }
        Ok(vec![series])
    }

    fn summarize(&self, raw: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        if raw.len() != 1 || raw[0].len() != self.t0 {
            return Err(ModelError::WrongDataShape {
                detail: format!(
                    "expected one series of length {}, got {} row(s) of length {}",
                    self.t0,
                    raw.len(),
                    raw.first().map_or(0, Vec::len)
                ),
            });
        }
        Ok(raw[0].clone())
    }

    fn analytic_cov(&self, theta: &[f64]) -> Result<SymmetricMatrix, ModelError> {
        ensure_in_support(self, theta)?;
        let phi = theta[0];
        let scale = 1.0 / (1.0 - phi * phi);
        Ok(SymmetricMatrix::from_fn(self.t0, |i, j| {
            phi.powi(i.abs_diff(j) as i32) * scale
        })?)
    }

    fn analytic_loglik(&self, theta: &[f64], s_obs: &[f64]) -> Result<f64, ModelError> {
        let cov = self.analytic_cov(theta)?;
        let zeros = vec![0.0; self.t0];
        Ok(gaussian_loglik(s_obs, &zeros, &cov)?)
    }

    fn has_analytic_loglik(&self) -> bool {
        true
    }
}
