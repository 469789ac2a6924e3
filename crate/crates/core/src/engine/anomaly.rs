use crate::error::{BadacError, Result};
use crate::model::{Dataset, Instance};

/// Uniform density `1/(b-a)` per point on `[lower, upper]`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopHatPrior {
    lower: f64,
    upper: f64,
    per_point_log_density: f64,
}

impl TopHatPrior {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || upper <= lower {
            return Err(BadacError::InvalidTopHat { lower, upper });
        }
        Ok(TopHatPrior {
            lower,
            upper,
            per_point_log_density: -(upper - lower).ln(),
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn per_point_log_density(&self) -> f64 {
        self.per_point_log_density
    }
}

/// How the anomaly hypothesis scores an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnomalyLikelihood {
    /// Product of per-point top-hat densities.
    TopHat(TopHatPrior),
    /// A fixed per-instance log-likelihood, typically from contamination
    /// calibration.
    Calibrated(f64),
}

/// The anomaly hypothesis as it enters the posterior normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyHypothesis {
    pub likelihood: AnomalyLikelihood,
    pub prior: f64,
}

impl AnomalyHypothesis {
    pub fn log_likelihood(&self, test: &Instance) -> f64 {
        match self.likelihood {
            AnomalyLikelihood::TopHat(prior) => anomaly_log_likelihood(test, &prior),
            AnomalyLikelihood::Calibrated(v) => v,
        }
    }
}

/// `m · log(1/(b-a))` if every value lies in `[a, b]`, otherwise `-∞`.
pub fn anomaly_log_likelihood(test: &Instance, prior: &TopHatPrior) -> f64 {
    if test.values().iter().all(|v| (prior.lower..=prior.upper).contains(v)) {
        test.len() as f64 * prior.per_point_log_density
    } else {
        f64::NEG_INFINITY
    }
}

/// Top-hat spanning twice the observed value range, centered on it.
pub fn make_tophat_from_data(dataset: &Dataset) -> Result<TopHatPrior> {
    tophat_from_values(dataset.instances().iter().flat_map(|i| i.values().iter().copied()))
}

pub(crate) fn tophat_from_values(values: impl Iterator<Item = f64>) -> Result<TopHatPrior> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return Err(BadacError::EmptyDataset);
    }
    let width = hi - lo;
    if width <= 0.0 {
        return Err(BadacError::DegenerateRange);
    }
    let mid = 0.5 * (lo + hi);
    TopHatPrior::new(mid - width, mid + width)
}

/// Nearest-rank `(1 - fraction)` quantile, counted from the most anomalous
/// end, of per-instance known-class log-evidence sums.
///
/// Returns the `⌈fraction·N⌉`-th smallest sum: with that value as the anomaly
/// term, exactly that many instances (more on ties) have a known-class
/// evidence at or below it.
pub fn calibrate_tophat_by_contamination(known_evidence_sums: &[f64], fraction: f64) -> Result<f64> {
    if known_evidence_sums.is_empty() {
        return Err(BadacError::EmptyInput);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(BadacError::InvalidFraction(fraction));
    }
    let mut sorted = known_evidence_sums.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Guard against 0.01 * 100 landing a hair above 1.
    let k = ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[k.min(n) - 1])
}
