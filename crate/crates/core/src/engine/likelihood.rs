use std::f64::consts::TAU;

use super::log_sum_exp;
use crate::error::{BadacError, Result};
use crate::model::{ClassModel, Instance};

/// Log of `N(d | y, var_d + var_y)`: the latent true value integrated out of
/// the product of two Gaussian measurement models.
#[inline]
pub fn point_log_likelihood(d: f64, var_d: f64, y: f64, var_y: f64) -> f64 {
    let var = var_d + var_y;
    let r = d - y;
    -0.5 * ((TAU * var).ln() + r * r / var)
}

/// Sum of per-point log-likelihoods over two aligned value/sigma vectors.
#[inline]
pub(crate) fn convolved_log_likelihood(d: &[f64], sigma_d: &[f64], y: &[f64], sigma_y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..d.len() {
        let var = sigma_d[j] * sigma_d[j] + sigma_y[j] * sigma_y[j];
        let r = d[j] - y[j];
        acc += (TAU * var).ln() + r * r / var;
    }
    -0.5 * acc
}

/// `Σ_j log N(d_j | y_j, σ_d,j² + σ_y,j²)` for a test/train pair.
pub fn pairwise_log_likelihood(test: &Instance, train: &Instance) -> Result<f64> {
    if !test.shares_grid(train) {
        return Err(BadacError::GridMismatch);
    }
    Ok(convolved_log_likelihood(test.values(), test.sigmas(), train.values(), train.sigmas()))
}

/// Stable `log((1/n) Σ_i exp(L_i))`.
pub fn class_log_evidence_from_pairs(pair_log_likelihoods: &[f64]) -> Result<f64> {
    if pair_log_likelihoods.is_empty() {
        return Err(BadacError::EmptyInput);
    }
    Ok(log_sum_exp(pair_log_likelihoods) - (pair_log_likelihoods.len() as f64).ln())
}

/// Log-evidence of `test` under the class, without the class prior.
pub fn class_log_evidence(test: &Instance, model: &ClassModel) -> Result<f64> {
    if model.is_empty() {
        return Err(BadacError::EmptyClass(model.class_id()));
    }
    if !test.grid().same_as(model.grid()) {
        return Err(BadacError::GridMismatch);
    }
    let pairs: Vec<f64> = model
        .instances()
        .iter()
        .map(|train| convolved_log_likelihood(test.values(), test.sigmas(), train.values(), train.sigmas()))
        .collect();
    class_log_evidence_from_pairs(&pairs)
}
