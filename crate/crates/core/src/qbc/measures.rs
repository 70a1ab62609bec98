use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use super::state::DensityOperator;
use super::{CMatrix, QbcError, Result};
use crate::scalar::Scalar;

/// Eigen-decomposition of the Hermitian part of `m`.
pub(crate) fn hermitian_eigen<T: Scalar>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let half = Complex::new(T::lit(0.5), T::zero());
    let h = (m + m.adjoint()).map(|z| z * half);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Square root of a positive semidefinite Hermitian matrix. Negative
/// eigenvalues from rounding are clamped to zero.
pub(crate) fn psd_sqrt<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    let (vals, vecs) = hermitian_eigen(m);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| Complex::new(v.max(T::zero()).sqrt(), T::zero())),
    ));
    &vecs * d * vecs.adjoint()
}

fn check_dims<T: Scalar>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(QbcError::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    Ok(())
}

fn clamp_unit<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// `½ ‖ρ − σ‖₁`, computed from the eigenvalues of the Hermitian difference.
pub fn trace_distance<T: Scalar>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> Result<T> {
    check_dims(rho, sigma)?;
    let (vals, _) = hermitian_eigen(&(rho.matrix() - sigma.matrix()));
    let sum = vals.iter().fold(T::zero(), |acc, v| acc + v.abs());
    Ok(clamp_unit(sum * T::lit(0.5)))
}

/// Root fidelity `Tr √(√ρ σ √ρ)`.
pub fn fidelity<T: Scalar>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> Result<T> {
    check_dims(rho, sigma)?;
    let s = psd_sqrt(rho.matrix());
    let inner = &s * sigma.matrix() * &s;
    let (vals, _) = hermitian_eigen(&inner);
    let sum = vals.iter().fold(T::zero(), |acc, &v| acc + v.max(T::zero()).sqrt());
    Ok(clamp_unit(sum))
}
