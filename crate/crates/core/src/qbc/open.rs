use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;

use super::state::{DensityOperator, PureState};
use super::{CMatrix, QbcError, Result};
use crate::scalar::Scalar;

/// Completely positive, trace-preserving map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenOperation<T: Scalar> {
    dim: usize,
    kraus: Vec<CMatrix<T>>,
}

impl<T: Scalar> OpenOperation<T> {
    /// Requires `Σ K†K = I` to within the scalar's operator tolerance.
    pub fn new(kraus: Vec<CMatrix<T>>) -> Result<Self> {
        let first = kraus.first().ok_or(QbcError::EmptyKraus)?;
        let dim = first.nrows();
        let mut sum = DMatrix::zeros(dim, dim);
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(QbcError::DimensionMismatch { expected: dim, found: k.nrows().max(k.ncols()) });
            }
            sum += k.adjoint() * k;
        }
        let deviation = (sum - DMatrix::<Complex<T>>::identity(dim, dim))
            .iter()
            .map(|z| z.modulus())
            .fold(T::zero(), |a, b| a.max(b));
        if deviation.as_f64() > T::OP_TOL {
            return Err(QbcError::NotTracePreserving { deviation: deviation.as_f64() });
        }
        Ok(Self { dim, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, kraus: vec![DMatrix::identity(dim, dim)] }
    }

    /// Full depolarization onto `I / dim`, via the `dim²` Weyl operators
    /// `X^a Z^b / dim`.
    pub fn depolarizing(dim: usize) -> Self {
        let scale = T::one() / T::lit(dim as f64);
        let mut kraus = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let k = DMatrix::from_fn(dim, dim, |row, col| {
                    if row == (col + a) % dim {
                        let angle = T::two_pi() * T::lit((b * col % dim) as f64) / T::lit(dim as f64);
                        Complex::new(angle.cos() * scale, angle.sin() * scale)
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                });
                kraus.push(k);
            }
        }
        Self { dim, kraus }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix<T>] {
        &self.kraus
    }

    /// `Σ K ρ K†`.
    pub fn apply(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        if rho.dim() != self.dim {
            return Err(QbcError::DimensionMismatch { expected: self.dim, found: rho.dim() });
        }
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        DensityOperator::new(out)
    }
}

/// Applies the opening channel to `|ψ⟩⟨ψ|`.
pub fn apply_open<T: Scalar>(op: &OpenOperation<T>, state: &PureState<T>) -> Result<DensityOperator<T>> {
    if state.dims().total() != op.dim() {
        return Err(QbcError::DimensionMismatch { expected: op.dim(), found: state.dims().total() });
    }
    op.apply(&DensityOperator::from_pure(state))
}
