use super::likelihood::convolved_log_likelihood;
use crate::error::{BadacError, Result};
use crate::model::{ClassModel, Instance, TemplateModel};

/// Collapses a class into its per-point inverse-variance mean and error.
pub fn compress_to_template(model: &ClassModel) -> Result<TemplateModel> {
    let m = model.grid().len();
    let mut precision = vec![0.0; m];
    let mut weighted = vec![0.0; m];
    for inst in model.instances() {
        for j in 0..m {
            let w = 1.0 / (inst.sigmas()[j] * inst.sigmas()[j]);
            precision[j] += w;
            weighted[j] += w * inst.values()[j];
        }
    }
    let variance: Vec<f64> = precision.iter().map(|p| 1.0 / p).collect();
    let mean = variance.iter().zip(&weighted).map(|(v, w)| v * w).collect();
    let sigma = variance.iter().map(|v| v.sqrt()).collect();
    TemplateModel::new(model.class_id(), model.grid().clone(), mean, sigma, model.prior())
}

/// `Σ_j log N(d_j | ŷ_j, σ_d,j² + σ̂_j²)`.
pub fn template_log_likelihood(test: &Instance, tmpl: &TemplateModel) -> Result<f64> {
    if !test.grid().same_as(tmpl.grid()) {
        return Err(BadacError::GridMismatch);
    }
    Ok(convolved_log_likelihood(test.values(), test.sigmas(), tmpl.mean(), tmpl.sigma()))
}
