//! Symmetric positive semidefinite covariance over the feature index.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{BadacError, Result};

/// Largest diagonal jitter accepted when factorizing a PSD matrix.
pub const MAX_JITTER: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    matrix: DMatrix<f64>,
}

impl CovarianceModel {
    /// Validates symmetry and positive semidefiniteness.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(BadacError::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(BadacError::NonPsdCovariance);
        }
        let n = matrix.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
                let scale = a.abs().max(b.abs());
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(BadacError::NonSymmetricCovariance);
                }
            }
        }
        factorize(&matrix)?;
        Ok(CovarianceModel { matrix })
    }

    pub fn from_row_major(m: usize, data: &[f64]) -> Result<Self> {
        if data.len() != m * m {
            return Err(BadacError::DimensionMismatch {
                expected: m * m,
                actual: data.len(),
            });
        }
        CovarianceModel::new(DMatrix::from_row_slice(m, m, data))
    }

    pub fn zeros(m: usize) -> Self {
        CovarianceModel {
            matrix: DMatrix::zeros(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    /// Lower-triangular factor `L` with `L Lᵀ = C (+ jitter)`.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        factorize(&self.matrix).map(|c| c.l())
    }
}

/// Cholesky factorization, retrying once with `MAX_JITTER` on the diagonal.
pub(crate) fn factorize(matrix: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(matrix.clone()) {
        return Ok(c);
    }
    let n = matrix.nrows();
    let jittered = matrix + DMatrix::<f64>::identity(n, n) * MAX_JITTER;
    Cholesky::new(jittered).ok_or(BadacError::NonPsdCovariance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let err = CovarianceModel::from_row_major(2, &[1.0, 0.5, 0.4, 1.0]).unwrap_err();
        assert_eq!(err, BadacError::NonSymmetricCovariance);
    }

    #[test]
    fn rejects_indefinite() {
        let err = CovarianceModel::from_row_major(2, &[1.0, 2.0, 2.0, 1.0]).unwrap_err();
        assert_eq!(err, BadacError::NonPsdCovariance);
    }

    #[test]
    fn accepts_singular_psd_with_jitter() {
        // rank one: [1 1; 1 1]
        let cov = CovarianceModel::from_row_major(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let l = cov.cholesky_factor().unwrap();
        let back = &l * l.transpose();
        assert!((back[(0, 1)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_shape() {
        assert!(matches!(
            CovarianceModel::from_row_major(2, &[1.0, 0.0, 0.0]),
            Err(BadacError::DimensionMismatch { .. })
        ));
    }
}
