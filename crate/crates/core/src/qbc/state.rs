use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::measures::hermitian_eigen;
use super::{CMatrix, QbcError, Result};
use crate::scalar::Scalar;

/// Default cap on `dim_a * dim_b`.
pub const DEFAULT_DIM_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertDims {
    dim_a: usize,
    dim_b: usize,
}

impl HilbertDims {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        Self::with_cap(dim_a, dim_b, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(dim_a: usize, dim_b: usize, cap: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(QbcError::ZeroDimension);
        }
        let product = dim_a.saturating_mul(dim_b);
        if product > cap {
            return Err(QbcError::DimensionCap { product, cap });
        }
        Ok(Self { dim_a, dim_b })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    fn index(&self, a: usize, b: usize) -> usize {
        a * self.dim_b + b
    }
}

/// Unit vector in `A ⊗ B`, amplitudes stored row-major by `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Scalar> {
    dims: HilbertDims,
    amplitudes: DVector<Complex<T>>,
}

impl<T: Scalar> PureState<T> {
    pub fn new(dims: HilbertDims, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(QbcError::DimensionMismatch { expected: dims.total(), found: amplitudes.len() });
        }
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm().as_f64();
        if (norm - 1.0).abs() > T::NORM_TOL {
            return Err(QbcError::NotNormalized { norm });
        }
        Ok(Self { dims, amplitudes })
    }

    /// Like [`new`](Self::new) but rescales the amplitudes to unit norm.
    pub fn normalized(dims: HilbertDims, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(QbcError::DimensionMismatch { expected: dims.total(), found: amplitudes.len() });
        }
        let mut v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm <= T::zero() {
            return Err(QbcError::ZeroVector);
        }
        v.unscale_mut(norm);
        Ok(Self { dims, amplitudes: v })
    }

    /// Computational basis state `|a⟩_A |b⟩_B`.
    pub fn basis(dims: HilbertDims, a: usize, b: usize) -> Result<Self> {
        if a >= dims.dim_a || b >= dims.dim_b {
            return Err(QbcError::DimensionMismatch { expected: dims.total(), found: dims.index(a, b) + 1 });
        }
        let mut v = vec![Complex::new(T::zero(), T::zero()); dims.total()];
        v[dims.index(a, b)] = Complex::new(T::one(), T::zero());
        Self::new(dims, v)
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amplitudes
    }

    pub fn amplitude(&self, a: usize, b: usize) -> Complex<T> {
        self.amplitudes[self.dims.index(a, b)]
    }

    /// Amplitudes reshaped as a `dim_a x dim_b` matrix.
    pub fn coefficient_matrix(&self) -> CMatrix<T> {
        DMatrix::from_fn(self.dims.dim_a, self.dims.dim_b, |a, b| self.amplitude(a, b))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix<T> {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `(U ⊗ I_B)|ψ⟩`. `U` must be a `dim_a x dim_a` unitary.
    pub fn apply_local_a(&self, u: &CMatrix<T>) -> Result<Self> {
        if u.nrows() != self.dims.dim_a || u.ncols() != self.dims.dim_a {
            return Err(QbcError::DimensionMismatch { expected: self.dims.dim_a, found: u.nrows() });
        }
        let m = u * self.coefficient_matrix();
        let amps = (0..self.dims.dim_a)
            .flat_map(|a| (0..self.dims.dim_b).map(move |b| (a, b)))
            .map(|(a, b)| m[(a, b)])
            .collect();
        Self::new(self.dims, amps)
    }

    /// Euclidean distance to `other` after removing the best global phase.
    pub fn phase_distance(&self, other: &Self) -> T {
        let overlap = other.inner(self).modulus();
        // || a - e^{iφ} b ||^2 = 2 - 2 |⟨b|a⟩| at the optimal φ
        let d2 = T::lit(2.0) - T::lit(2.0) * overlap;
        if d2 > T::zero() {
            d2.sqrt()
        } else {
            T::zero()
        }
    }

    /// Equality up to a unit-modulus factor.
    pub fn equal_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.dims == other.dims && self.phase_distance(other).as_f64() <= tol
    }
}

/// Positive semidefinite, Hermitian, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Scalar> {
    matrix: CMatrix<T>,
}

impl<T: Scalar> DensityOperator<T> {
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || rows == 0 {
            return Err(QbcError::NotSquare { rows, cols });
        }
        let deviation = (&matrix - matrix.adjoint()).iter().map(|z| z.modulus()).fold(T::zero(), |a, b| a.max(b));
        if deviation.as_f64() > T::OP_TOL {
            return Err(QbcError::NotHermitian { deviation: deviation.as_f64() });
        }
        let trace = matrix.trace();
        if (trace.re.as_f64() - 1.0).abs() > T::OP_TOL || trace.im.as_f64().abs() > T::OP_TOL {
            return Err(QbcError::BadTrace { trace: trace.re.as_f64() });
        }
        let (eigs, _) = hermitian_eigen(&matrix);
        let min = eigs.iter().copied().fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b));
        if min.as_f64() < -T::OP_TOL {
            return Err(QbcError::NotPositive { min_eigenvalue: min.as_f64() });
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix that is valid by construction.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix<T>) -> Self {
        Self { matrix }
    }

    pub fn from_pure(state: &PureState<T>) -> Self {
        Self { matrix: state.projector() }
    }

    pub fn from_diagonal(probs: &[T]) -> Result<Self> {
        let d = DVector::from_iterator(probs.len(), probs.iter().map(|&p| Complex::new(p, T::zero())));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(QbcError::ZeroDimension);
        }
        let w = T::one() / T::lit(dim as f64);
        Ok(Self { matrix: DMatrix::from_diagonal_element(dim, dim, Complex::new(w, T::zero())) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        let (mut e, _) = hermitian_eigen(&self.matrix);
        e.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        e
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Self, weight: T) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(QbcError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let w = Complex::new(weight, T::zero());
        let v = Complex::new(T::one() - weight, T::zero());
        Self::new(self.matrix.map(|z| z * w) + other.matrix.map(|z| z * v))
    }

    /// Traces out `A` from an operator on `A ⊗ B`.
    pub fn partial_trace_a(&self, dims: HilbertDims) -> Result<Self> {
        if dims.total() != self.dim() {
            return Err(QbcError::DimensionMismatch { expected: dims.total(), found: self.dim() });
        }
        Self::new(reduce_a(&self.matrix, dims))
    }
}

pub(crate) fn reduce_a<T: Scalar>(m: &CMatrix<T>, dims: HilbertDims) -> CMatrix<T> {
    DMatrix::from_fn(dims.dim_b, dims.dim_b, |b, bp| {
        (0..dims.dim_a)
            .fold(Complex::new(T::zero(), T::zero()), |acc, a| acc + m[(dims.index(a, b), dims.index(a, bp))])
    })
}

/// Reduced state on `B` of a pure state on `A ⊗ B`.
pub fn partial_trace_a<T: Scalar>(state: &PureState<T>) -> Result<DensityOperator<T>> {
    DensityOperator::new(marginal_b(state))
}

/// `C^T conj(C)`: `ρ_B[b, b'] = Σ_a ψ(a, b) conj(ψ(a, b'))`.
pub(crate) fn marginal_b<T: Scalar>(state: &PureState<T>) -> CMatrix<T> {
    let c = state.coefficient_matrix();
    c.transpose() * c.conjugate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn dims_enforce_cap() {
        assert!(HilbertDims::new(8, 8).is_ok());
        assert_eq!(HilbertDims::new(8, 9), Err(QbcError::DimensionCap { product: 72, cap: 64 }));
        assert!(HilbertDims::with_cap(8, 9, 100).is_ok());
        assert_eq!(HilbertDims::new(0, 2), Err(QbcError::ZeroDimension));
    }

    #[test]
    fn state_validation() {
        let d = HilbertDims::new(2, 2).unwrap();
        assert!(matches!(PureState::<f64>::new(d, vec![c(1.0, 0.0); 3]), Err(QbcError::DimensionMismatch { .. })));
        assert!(matches!(PureState::<f64>::new(d, vec![c(1.0, 0.0); 4]), Err(QbcError::NotNormalized { .. })));
        let s = PureState::<f64>::normalized(d, vec![c(1.0, 0.0); 4]).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-12);
        assert_eq!(PureState::<f64>::normalized(d, vec![c(0.0, 0.0); 4]), Err(QbcError::ZeroVector));
    }

    #[test]
    fn product_state_traces_to_b_factor() {
        let d = HilbertDims::new(2, 2).unwrap();
        let s = PureState::<f64>::basis(d, 0, 1).unwrap();
        let rho = partial_trace_a(&s).unwrap();
        let want = DensityOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!((rho.matrix() - want.matrix()).norm() < 1e-12);
    }

    #[test]
    fn bell_state_has_maximally_mixed_marginal() {
        let d = HilbertDims::new(2, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = PureState::new(d, vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
        let rho = partial_trace_a(&s).unwrap();
        let want = DensityOperator::<f64>::maximally_mixed(2).unwrap();
        assert!((rho.matrix() - want.matrix()).norm() < 1e-12);
    }

    #[test]
    fn density_invariants_enforced() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.1), c(0.1, 0.1), c(0.5, 0.0)]);
        assert!(matches!(DensityOperator::new(m), Err(QbcError::NotHermitian { .. })));
        assert!(matches!(DensityOperator::from_diagonal(&[0.5, 0.6]), Err(QbcError::BadTrace { .. })));
        assert!(matches!(DensityOperator::from_diagonal(&[1.5, -0.5]), Err(QbcError::NotPositive { .. })));
    }

    #[test]
    fn global_phase_is_ignored() {
        let d = HilbertDims::new(2, 1).unwrap();
        let s = PureState::new(d, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let phase = Complex::from_polar(1.0, 1.1);
        let t = PureState::new(d, s.amplitudes().iter().map(|z| z * phase).collect()).unwrap();
        assert!(s.equal_up_to_phase(&t, 1e-12));
        assert!(!s.equal_up_to_phase(&PureState::basis(d, 0, 0).unwrap(), 1e-3));
    }

    #[test]
    fn works_in_single_precision() {
        let d = HilbertDims::new(2, 2).unwrap();
        let h = std::f32::consts::FRAC_1_SQRT_2;
        let z = Complex::new(0.0f32, 0.0);
        let s = PureState::<f32>::new(d, vec![Complex::new(h, 0.0), z, z, Complex::new(h, 0.0)]).unwrap();
        let rho = partial_trace_a(&s).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-6);
    }
}
