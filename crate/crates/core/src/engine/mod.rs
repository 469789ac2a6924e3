//! The BADAC scoring engine.
//!
//! Each test instance is compared against every training instance of a class.
//! The latent true value behind each pair of measurements is integrated out
//! analytically under Gaussian noise with a flat prior, which leaves a
//! Gaussian in the difference of the two observations with the variances
//! added. Per-class evidences are averages of those pair likelihoods; the
//! anomaly hypothesis is a top-hat density. Everything is computed in log
//! space.

mod anomaly;
mod correlated;
mod likelihood;
mod posterior;
pub mod quadrature;
mod template;

pub use anomaly::{
    anomaly_log_likelihood, calibrate_tophat_by_contamination, make_tophat_from_data, AnomalyHypothesis,
    AnomalyLikelihood, TopHatPrior,
};
pub(crate) use anomaly::tophat_from_values;
pub use correlated::correlated_log_likelihood;
pub use likelihood::{class_log_evidence, class_log_evidence_from_pairs, pairwise_log_likelihood, point_log_likelihood};
pub use posterior::{
    normalize_priors, online_update, posterior, rank_anomalies, Hypothesis, OnlineConfig, PosteriorReport,
    DEFAULT_ADMISSION_THRESHOLD,
};
pub use quadrature::quadrature_oracle;
pub use template::{compress_to_template, template_log_likelihood};

/// `log Σ exp(x_i)` with the maximum shifted out. Returns `-∞` for an empty
/// slice or when every term is `-∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}
