use nalgebra::SVD;

use super::measures::{fidelity, trace_distance};
use super::open::{apply_open, OpenOperation};
use super::state::{marginal_b, DensityOperator, HilbertDims, PureState};
use super::{CMatrix, QbcError, Result};
use crate::scalar::Scalar;

/// Commitment states for bit 0 and bit 1 plus the opening channel.
#[derive(Debug, Clone)]
pub struct QbcScheme<T: Scalar> {
    dims: HilbertDims,
    c0: PureState<T>,
    c1: PureState<T>,
    open_op: OpenOperation<T>,
    open_distance: T,
}

impl<T: Scalar> QbcScheme<T> {
    /// Fails with [`QbcError::IndistinguishableOpen`] if the opening channel
    /// maps both commitments to the same state.
    pub fn new(c0: PureState<T>, c1: PureState<T>, open_op: OpenOperation<T>) -> Result<Self> {
        let dims = c0.dims();
        if c1.dims() != dims {
            return Err(QbcError::DimensionMismatch { expected: dims.total(), found: c1.dims().total() });
        }
        let r0 = apply_open(&open_op, &c0)?;
        let r1 = apply_open(&open_op, &c1)?;
        let open_distance = trace_distance(&r0, &r1)?;
        if open_distance.as_f64() <= T::OP_TOL {
            return Err(QbcError::IndistinguishableOpen { distance: open_distance.as_f64() });
        }
        Ok(Self { dims, c0, c1, open_op, open_distance })
    }

    /// Scheme opened by the identity channel.
    pub fn with_identity_open(c0: PureState<T>, c1: PureState<T>) -> Result<Self> {
        let d = c0.dims().total();
        Self::new(c0, c1, OpenOperation::identity(d))
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn c0(&self) -> &PureState<T> {
        &self.c0
    }

    pub fn c1(&self) -> &PureState<T> {
        &self.c1
    }

    pub fn open_op(&self) -> &OpenOperation<T> {
        &self.open_op
    }

    /// Trace distance between `Open(c0)` and `Open(c1)`.
    pub fn open_distance(&self) -> T {
        self.open_distance
    }

    /// Reduced states on `B` of the two commitments.
    pub fn marginals(&self) -> (DensityOperator<T>, DensityOperator<T>) {
        (
            DensityOperator::from_matrix_unchecked(marginal_b(&self.c0)),
            DensityOperator::from_matrix_unchecked(marginal_b(&self.c1)),
        )
    }
}

/// Trace distance between the receiver's reduced states. Zero iff concealing.
pub fn concealing_defect<T: Scalar>(scheme: &QbcScheme<T>) -> T {
    let (r0, r1) = scheme.marginals();
    trace_distance(&r0, &r1).unwrap_or_else(|_| unreachable!("marginals share dim_b"))
}

/// Result of maximizing `|⟨c1|(U ⊗ I)|c0⟩|` over unitaries `U` on `A`.
#[derive(Debug, Clone)]
pub struct BindingAnalysis<T: Scalar> {
    /// `1 - max_overlap`. Zero iff a perfect cheating unitary exists.
    pub strength: T,
    pub max_overlap: T,
    /// A unitary attaining the maximum, with phase chosen so the overlap is
    /// real and non-negative.
    pub optimal_unitary: CMatrix<T>,
}

impl<T: Scalar> BindingAnalysis<T> {
    /// The cheating unitary, when binding fails to within `tol`.
    pub fn witness(&self, tol: f64) -> Option<&CMatrix<T>> {
        (self.strength.as_f64() <= tol).then_some(&self.optimal_unitary)
    }
}

/// Closed-form maximization.
///
/// With `C0`, `C1` the `dim_a x dim_b` coefficient matrices,
/// `⟨c1|(U ⊗ I)|c0⟩ = Tr(U M)` for `M = C0 C1†`, whose maximum modulus over
/// unitaries is the nuclear norm of `M`, attained at `U = V W†` where
/// `M = W Σ V†`.
pub fn binding_analysis<T: Scalar>(scheme: &QbcScheme<T>) -> BindingAnalysis<T> {
    let m = scheme.c0.coefficient_matrix() * scheme.c1.coefficient_matrix().adjoint();
    let svd = SVD::new(m, true, true);
    let nuclear = svd.singular_values.iter().fold(T::zero(), |acc, &s| acc + s);
    let (w, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("SVD computed with both factors"),
    };
    let optimal_unitary = v_t.adjoint() * w.adjoint();
    let max_overlap = nuclear.min(T::one());
    BindingAnalysis { strength: (T::one() - max_overlap).max(T::zero()), max_overlap, optimal_unitary }
}

pub fn binding_strength<T: Scalar>(scheme: &QbcScheme<T>) -> T {
    binding_analysis(scheme).strength
}

/// Fidelity of the two reduced states, which equals the maximal overlap of
/// [`binding_analysis`] by Uhlmann's theorem. Computed by a separate route.
pub fn uhlmann_overlap<T: Scalar>(scheme: &QbcScheme<T>) -> T {
    let (r0, r1) = scheme.marginals();
    fidelity(&r0, &r1).unwrap_or_else(|_| unreachable!("marginals share dim_b"))
}
