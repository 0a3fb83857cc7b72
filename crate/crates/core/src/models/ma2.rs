//! Second-order moving-average time series with unit innovation variance.
//!
//! `x_t = w_t + theta1 * w_{t-1} + theta2 * w_{t-2}` for `t = 1..=t0` with
//! independent standard normal innovations `w_{-1}, w_0, ..., w_{t0}`. The
//! summary statistic is the full series, whose distribution is exactly a
//! zero-mean Gaussian with a banded Toeplitz covariance — so an exact
//! likelihood is available for reference samplers.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::SymmetricMatrix;
use crate::models::{ensure_in_support, Model, ModelError, Prior, SupportConstraint};
use crate::synthlik::gaussian_loglik;

pub struct Ma2Model {
    t0: usize,
    prior: Prior,
}

impl Ma2Model {
    /// Invertibility region: `-1 < theta2 < 1`, `theta1 + theta2 > -1`,
    /// `theta1 - theta2 < 1` (which confines `theta1` to `(-2, 2)`).
    pub fn new(t0: usize) -> Result<Self, ModelError> {
        if t0 < 3 {
            return Err(ModelError::InvalidSettings {
                detail: format!("series length must cover all covariance bands, got t0 = {t0}"),
            });
        }
        let prior = Prior::with_constraint(
            vec![(-2.0, 2.0), (-1.0, 1.0)],
            SupportConstraint::Ma2Invertibility,
        );
        Ok(Ma2Model { t0, prior })
    }

    /// Lag-`h` autocovariance of the process.
    fn autocovariance(theta: &[f64], h: usize) -> f64 {
        let (t1, t2) = (theta[0], theta[1]);
        match h {
            0 => 1.0 + t1 * t1 + t2 * t2,
            1 => t1 * (1.0 + t2),
            2 => t2,
            _ => 0.0,
        }
    }
}

impl Model for Ma2Model {
    fn name(&self) -> &'static str {
        "ma2"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["theta1", "theta2"]
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
        let (t1, t2) = (theta[0], theta[1]);
        // innovations[i] holds w_{i-2}: the series needs w_{-1} .. w_{t0}.
        let innovations: Vec<f64> = (0..self.t0 + 2)
            .map(|_| StandardNormal.sample(&mut *rng))
            .collect();
        let series: Vec<f64> = (1..=self.t0)
            .map(|t| innovations[t + 1] + t1 * innovations[t] + t2 * innovations[t - 1])
            .collect();
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
        Ok(SymmetricMatrix::from_fn(self.t0, |i, j| {
            Self::autocovariance(theta, i.abs_diff(j))
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky_lower;
    use crate::stream::Stream;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_parameters_reproduce_innovations() {
        // At theta = (0, 0) the series is the innovation sequence itself;
        // regenerating the same stream exposes it.
        let model = Ma2Model::new(20).unwrap();
        let stream = Stream::root(11).child(0);
        let series = &model.simulate_raw(&[0.0, 0.0], &mut stream.rng()).unwrap()[0];
        let mut rng = stream.rng();
        let innovations: Vec<f64> = (0..22).map(|_| StandardNormal.sample(&mut rng)).collect();
        for t in 1..=20 {
            assert_eq!(series[t - 1], innovations[t + 1]);
        }
    }

    #[test]
    fn series_follows_the_moving_average_recursion() {
        let model = Ma2Model::new(15).unwrap();
        let stream = Stream::root(12).child(0);
        let theta = [0.6, 0.2];
        let series = &model.simulate_raw(&theta, &mut stream.rng()).unwrap()[0];
        let mut rng = stream.rng();
        let w: Vec<f64> = (0..17).map(|_| StandardNormal.sample(&mut rng)).collect();
        for t in 1..=15 {
            assert_eq!(series[t - 1], w[t + 1] + 0.6 * w[t] + 0.2 * w[t - 1]);
        }
    }

    #[test]
    fn simulation_is_deterministic_in_the_stream() {
        let model = Ma2Model::new(30).unwrap();
        let s = Stream::root(99).child(7);
        let a = model.simulate_raw(&[0.3, -0.1], &mut s.rng()).unwrap();
        let b = model.simulate_raw(&[0.3, -0.1], &mut s.rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_support_parameters_are_rejected() {
        let model = Ma2Model::new(10).unwrap();
        let mut rng = Stream::root(1).child(0).rng();
        assert!(matches!(
            model.simulate_raw(&[-1.5, 0.2], &mut rng),
            Err(ModelError::OutOfSupport { .. })
        ));
        assert!(matches!(
            model.simulate_raw(&[0.1], &mut rng),
            Err(ModelError::WrongParameterCount { .. })
        ));
        assert!(model.analytic_cov(&[1.5, 0.2]).is_err());
    }

    #[test]
    fn analytic_covariance_bands() {
        let model = Ma2Model::new(6).unwrap();
        let cov = model.analytic_cov(&[0.6, 0.2]).unwrap();
        for i in 0..6 {
            assert_relative_eq!(cov[(i, i)], 1.40, epsilon = 1e-15);
        }
        assert_relative_eq!(cov[(0, 1)], 0.72, epsilon = 1e-15);
        assert_relative_eq!(cov[(0, 2)], 0.20, epsilon = 1e-15);
        assert_eq!(cov[(0, 3)], 0.0);
        assert_eq!(cov[(0, 5)], 0.0);

        let identity = Ma2Model::new(4).unwrap().analytic_cov(&[0.0, 0.0]).unwrap();
        assert_eq!(identity.matrix(), SymmetricMatrix::identity(4).matrix());
    }

    #[test]
    fn analytic_covariance_is_pd_across_prior_draws() {
        let model = Ma2Model::new(12).unwrap();
        let mut rng = Stream::root(21).child(0).rng();
        for _ in 0..100 {
            let theta = model.prior().sample(&mut rng);
            let cov = model.analytic_cov(&theta).unwrap();
            assert!(cholesky_lower(&cov).is_ok(), "not PD at {theta:?}");
        }
    }

    #[test]
    fn monte_carlo_autocovariances_match_analytic() {
        // 10^6 short series at theta = (0.6, 0.2): lag autocovariances
        // should land on (1.40, 0.72, 0.20, 0.0) well within 0.01.
        let t0 = 6;
        let model = Ma2Model::new(t0).unwrap();
        let theta = [0.6, 0.2];
        let reps = 1_000_000usize;
        let mut acc = [0.0f64; 4];
        let mut counts = [0usize; 4];
        let mut rng = Stream::root(77).child(0).rng();
        for _ in 0..reps {
            let series = &model.simulate_raw(&theta, &mut rng).unwrap()[0];
            for h in 0..4 {
                for t in 0..t0 - h {
                    acc[h] += series[t] * series[t + h];
                    counts[h] += 1;
                }
            }
        }
        let expected = [1.40, 0.72, 0.20, 0.0];
        for h in 0..4 {
            let estimate = acc[h] / counts[h] as f64;
            assert!(
                (estimate - expected[h]).abs() < 0.01,
                "lag {h}: {estimate} vs {}",
                expected[h]
            );
        }
    }

    #[test]
    fn analytic_loglik_matches_direct_density() {
        let model = Ma2Model::new(5).unwrap();
        let mut rng = Stream::root(31).child(0).rng();
        let s = &model.simulate_raw(&[0.6, 0.2], &mut rng).unwrap()[0];
        let ll = model.analytic_loglik(&[0.6, 0.2], s).unwrap();
        let direct =
            gaussian_loglik(s, &[0.0; 5], &model.analytic_cov(&[0.6, 0.2]).unwrap()).unwrap();
        assert_eq!(ll, direct);
        assert!(model.has_analytic_loglik());
    }
}
