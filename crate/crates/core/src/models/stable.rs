//! Symmetric alpha-stable sampling via the Chambers–Mallows–Stuck
//! construction.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::RngCore;
use rand_distr::{Distribution, Open01};

use crate::models::ModelError;

/// One draw from the symmetric alpha-stable distribution `S(alpha, xi)`
/// with stability `alpha` in (0, 2] and scale `xi > 0`.
///
/// Special cases: `alpha = 1` is Cauchy with scale `xi`; `alpha = 2` is
/// exactly `N(0, 2 xi^2)`.
pub fn stable_sample(alpha: f64, xi: f64, rng: &mut dyn RngCore) -> Result<f64, ModelError> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ModelError::OutOfSupport {
            detail: format!("stability parameter must lie in (0, 2], got {alpha}"),
        });
    }
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(ModelError::OutOfSupport {
            detail: format!("scale parameter must be positive, got {xi}"),
        });
    }
    Ok(xi * standard_stable(alpha, rng))
}

/// Unit-scale symmetric stable draw. Callers must ensure `alpha` in (0, 2].
///
/// Uses an angle `V` uniform on the open interval (-pi/2, pi/2) and an
/// independent unit exponential `W`; both come from open-interval uniforms
/// so no trigonometric or logarithmic singularity is ever hit.
pub(crate) fn standard_stable(alpha: f64, rng: &mut dyn RngCore) -> f64 {
    let u1: f64 = Open01.sample(&mut *rng);
    let v = PI * u1 - FRAC_PI_2;
    let u2: f64 = Open01.sample(&mut *rng);
    let w = -u2.ln();
    if alpha == 1.0 {
        return v.tan();
    }
    let scaled = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    scaled * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}
