use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::covariance::{factorize, CovarianceModel};
use crate::error::{BadacError, Result};
use crate::model::{Instance, TemplateModel};

/// Multivariate Gaussian log-density of `d - ŷ` under
/// `C + diag(σ_d²) + diag(σ̂²)`, through a Cholesky factorization.
pub fn correlated_log_likelihood(test: &Instance, tmpl: &TemplateModel, cov: &CovarianceModel) -> Result<f64> {
    let m = test.len();
    if !test.grid().same_as(tmpl.grid()) {
        return Err(BadacError::GridMismatch);
    }
    if cov.dim() != m {
        return Err(BadacError::DimensionMismatch {
            expected: m,
            actual: cov.dim(),
        });
    }
    let mut total: DMatrix<f64> = cov.matrix().clone();
    for j in 0..m {
        total[(j, j)] += test.sigmas()[j].powi(2) + tmpl.sigma()[j].powi(2);
    }
    let chol = factorize(&total)?;
    let resid = DVector::from_iterator(m, test.values().iter().zip(tmpl.mean()).map(|(d, y)| d - y));

    // log|Σ| = 2 Σ log L_jj ; r'Σ⁻¹r = |L⁻¹ r|²
    let l = chol.l_dirty();
    let log_det: f64 = 2.0 * (0..m).map(|j| l[(j, j)].ln()).sum::<f64>();
    let mut z = resid;
    l.solve_lower_triangular_mut(&mut z);
    let quad = z.norm_squared();
    Ok(-0.5 * (m as f64 * TAU.ln() + log_det + quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::template_log_likelihood;
    use crate::model::Grid;
    use crate::simulators::wedding_cake_covariance;
    use proptest::prelude::*;

    /// Dense evaluation with an explicit inverse and LU determinant.
    fn dense_log_density(resid: &[f64], sigma: &DMatrix<f64>) -> f64 {
        let m = resid.len();
        let r = DVector::from_row_slice(resid);
        let inv = sigma.clone().try_inverse().unwrap();
        let quad = (r.transpose() * inv * &r)[(0, 0)];
        let det = sigma.clone().lu().determinant();
        -0.5 * quad - 0.5 * ((TAU).powi(m as i32) * det).ln()
    }

    fn template(g: &Grid, mean: Vec<f64>, sigma: Vec<f64>) -> TemplateModel {
        TemplateModel::new(0, g.clone(), mean, sigma, 1.0).unwrap()
    }

    #[test]
    fn scalar_case() {
        let g = Grid::uniform(1).unwrap();
        let test = Instance::new(g.clone(), vec![0.7], vec![1e-9], None).unwrap();
        let t = template(&g, vec![0.2], vec![1e-9]);
        let cov = CovarianceModel::from_row_major(1, &[0.5]).unwrap();
        let got = correlated_log_likelihood(&test, &t, &cov).unwrap();
        let want = -0.5 * (TAU * 0.5).ln() - 0.25 / (2.0 * 0.5);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let g = Grid::uniform(2).unwrap();
        let test = Instance::new(g.clone(), vec![0.0, 0.0], vec![0.1, 0.1], None).unwrap();
        let t = template(&g, vec![0.0, 0.0], vec![0.1, 0.1]);
        let cov = CovarianceModel::zeros(3);
        assert!(matches!(
            correlated_log_likelihood(&test, &t, &cov),
            Err(BadacError::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn wedding_cake_matches_dense_oracle() {
        for m in [5usize, 8, 10] {
            let g = Grid::uniform(m).unwrap();
            let cov = wedding_cake_covariance(m, 0.3, 0.1, 5).unwrap();
            let values: Vec<f64> = (0..m).map(|j| (j as f64 * 0.7).sin()).collect();
            let test = Instance::new(g.clone(), values.clone(), vec![0.2; m], None).unwrap();
            let t = template(&g, vec![0.1; m], vec![0.05; m]);
            let got = correlated_log_likelihood(&test, &t, &cov).unwrap();
            let mut total = cov.matrix().clone();
            for j in 0..m {
                total[(j, j)] += 0.04 + 0.0025;
            }
            let resid: Vec<f64> = values.iter().map(|v| v - 0.1).collect();
            let want = dense_log_density(&resid, &total);
            assert!(((got - want) / want).abs() < 1e-8, "m={m} got {got} want {want}");
        }
    }

    proptest! {
        #[test]
        fn zero_covariance_reduces_to_template(
            pts in prop::collection::vec((-3.0f64..3.0, 0.05f64..3.0, -3.0f64..3.0, 0.05f64..3.0), 1..20)
        ) {
            let m = pts.len();
            let g = Grid::uniform(m).unwrap();
            let test = Instance::new(g.clone(), pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect(), None).unwrap();
            let t = template(&g, pts.iter().map(|p| p.2).collect(), pts.iter().map(|p| p.3).collect());
            let a = correlated_log_likelihood(&test, &t, &CovarianceModel::zeros(m)).unwrap();
            let b = template_log_likelihood(&test, &t).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }
}
