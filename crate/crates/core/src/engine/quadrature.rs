//! Numerical check of the analytic latent-value marginalization.
//!
//! Integrates `∫ N(d | y, σ_d) N(y_o | y, σ_y) dy` with composite Simpson's
//! rule. Used as a test oracle for [`super::point_log_likelihood`].

use std::f64::consts::TAU;

use crate::error::{BadacError, Result};

fn normal_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (TAU.sqrt() * sigma)
}

/// Fixed-step Simpson integration of the latent-value integral over
/// `bounds`, with step at most `min(σ_d, σ_y) / 50`.
///
/// Fails with `BoundsTooNarrow` when the Gaussian tail mass left outside the
/// bounds exceeds `1e-12` of the total.
pub fn quadrature_oracle(d: f64, sigma_d: f64, y_o: f64, sigma_y: f64, bounds: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bounds;
    if !(sigma_d > 0.0 && sigma_y > 0.0) {
        return Err(BadacError::NonPositiveSigma {
            index: 0,
            value: sigma_d.min(sigma_y),
        });
    }
    if lo.is_nan() || hi.is_nan() || hi <= lo {
        return Err(BadacError::BoundsTooNarrow { lower: lo, upper: hi });
    }
    // The integrand is a Gaussian in y centered at the precision-weighted mean.
    let (pd, py) = (sigma_d.powi(-2), sigma_y.powi(-2));
    let center = (pd * d + py * y_o) / (pd + py);
    let width = (pd + py).sqrt().recip();
    let tail = |edge: f64| {
        let z = (edge - center).abs() / width;
        // Mills-ratio bound on the one-sided tail: φ(z)/z.
        if z == 0.0 {
            0.5
        } else {
            (-0.5 * z * z).exp() / (TAU.sqrt() * z)
        }
    };
    let outside_lo = if lo < center { tail(lo) } else { 1.0 };
    let outside_hi = if hi > center { tail(hi) } else { 1.0 };
    if outside_lo + outside_hi > 1e-12 {
        return Err(BadacError::BoundsTooNarrow { lower: lo, upper: hi });
    }

    let max_step = sigma_d.min(sigma_y) / 50.0;
    let mut n = ((hi - lo) / max_step).ceil() as usize;
    n += n % 2;
    let h = (hi - lo) / n as f64;
    let f = |y: f64| normal_pdf(d, y, sigma_d) * normal_pdf(y_o, y, sigma_y);
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    Ok(sum * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::point_log_likelihood;
    use proptest::prelude::*;

    #[test]
    fn unit_case() {
        let q = quadrature_oracle(0.0, 1.0, 0.0, 1.0, (-10.0, 10.0)).unwrap();
        assert!((q - 0.28209479177387814).abs() < 1e-10);
    }

    #[test]
    fn offset_case() {
        let q = quadrature_oracle(1.0, 0.5, 0.0, 0.5, (-10.0, 10.0)).unwrap();
        // N(1 | 0, var 0.5) = e^{-1} / √π
        assert!((q - 0.20755374871029736).abs() < 1e-10);
    }

    #[test]
    fn narrow_bounds_are_detected() {
        let err = quadrature_oracle(0.0, 1.0, 0.0, 1.0, (-2.0, 2.0)).unwrap_err();
        assert!(matches!(err, BadacError::BoundsTooNarrow { .. }));
        assert!(quadrature_oracle(0.0, 1.0, 0.0, 1.0, (1.0, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn matches_closed_form(
            d in -3.0f64..3.0, z in -6.0f64..6.0, sd in 0.05f64..3.0, sy in 0.05f64..3.0
        ) {
            let s = (sd * sd + sy * sy).sqrt();
            let y = d + z * s;
            let bounds = (d.min(y) - 10.0 * s, d.max(y) + 10.0 * s);
            let q = quadrature_oracle(d, sd, y, sy, bounds).unwrap();
            let a = point_log_likelihood(d, sd * sd, y, sy * sy).exp();
            prop_assert!(((a - q) / q).abs() <= 1e-6);
        }
    }
}
