//! Dense 16x16 Hermitian helpers.

use nalgebra::{SVector, SymmetricEigen};
use num_complex::Complex64;

use crate::basis::{Matrix16, DIM};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

pub struct HermitianEigen {
    pub values: SVector<f64, DIM>,
    /// Column k is the eigenvector of `values[k]`.
    pub vectors: Matrix16,
}

pub fn hermitian_eigen(m: &Matrix16) -> Result<HermitianEigen> {
    let eig = SymmetricEigen::try_new(*m, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    Ok(HermitianEigen {
        values: eig.eigenvalues,
        vectors: eig.eigenvectors,
    })
}

/// exp(-i h t) for Hermitian `h`.
pub fn unitary_step(h: &Matrix16, t: f64) -> Result<Matrix16> {
    let eig = hermitian_eigen(h)?;
    let mut scaled = eig.vectors;
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::from_polar(1.0, -eig.values[k] * t);
    }
    Ok(scaled * eig.vectors.adjoint())
}

/// Largest |m_ij - conj(m_ji)|.
pub fn hermiticity_defect(m: &Matrix16) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_entry(m: &Matrix16) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// || U^dagger U - 1 ||_max.
pub fn unitarity_defect(u: &Matrix16) -> f64 {
    max_abs_entry(&(u.adjoint() * u - Matrix16::identity()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_of_diagonal() {
        let mut h = Matrix16::zeros();
        for k in 0..DIM {
            h[(k, k)] = Complex64::new(k as f64, 0.0);
        }
        let u = unitary_step(&h, 0.3).unwrap();
        for k in 0..DIM {
            let expect = Complex64::from_polar(1.0, -0.3 * k as f64);
            assert!((u[(k, k)] - expect).norm() < 1e-14);
        }
        assert!(unitarity_defect(&u) < 1e-14);
    }

    #[test]
    fn pauli_x_rotation() {
        // exp(-i (sigma_x/2) pi) = -i sigma_x on the 0/1 block
        let mut h = Matrix16::zeros();
        h[(0, 1)] = Complex64::new(0.5, 0.0);
        h[(1, 0)] = Complex64::new(0.5, 0.0);
        let u = unitary_step(&h, std::f64::consts::PI).unwrap();
        assert!((u[(1, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-13);
        assert!(u[(0, 0)].norm() < 1e-13);
    }
}
