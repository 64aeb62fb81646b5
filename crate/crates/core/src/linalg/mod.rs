//! Numerical primitives shared by the analysis modules.

pub mod eigen;
pub mod poly;

use nalgebra::DMatrix;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Largest absolute entry, used as a cheap matrix scale.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
