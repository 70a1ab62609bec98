//! Numerical model of bit commitment on a bipartite space `A ⊗ B`.
//!
//! A scheme is a pair of pure commitment states and an opening channel in
//! Kraus form. Concealing is measured as the trace distance between the two
//! reduced states on `B`; binding as one minus the best overlap a committer
//! can reach by acting unitarily on `A` alone. The two cannot both be perfect,
//! and [`binding_analysis`] returns the cheating unitary whenever binding fails.

mod file;
mod measures;
mod open;
mod scheme;
mod state;

use nalgebra::DMatrix;
use num_complex::Complex;
use thiserror::Error;

pub use file::{analyze, SchemeAnalysis, SchemeFile, SCHEME_FORMAT};
pub use measures::{fidelity, trace_distance};
pub use open::{apply_open, OpenOperation};
pub use scheme::{binding_analysis, binding_strength, concealing_defect, uhlmann_overlap, BindingAnalysis, QbcScheme};
pub use state::{partial_trace_a, DensityOperator, HilbertDims, PureState, DEFAULT_DIM_CAP};

/// Dense complex matrix over the scalar `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QbcError {
    #[error("dimensions must be positive")]
    ZeroDimension,
    #[error("dim_a * dim_b = {product} exceeds cap {cap}")]
    DimensionCap { product: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state norm {norm} is not 1")]
    NotNormalized { norm: f64 },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {deviation})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },
    #[error("negative eigenvalue {min_eigenvalue}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("Kraus list is empty")]
    EmptyKraus,
    #[error("Kraus operators are not trace preserving (deviation {deviation})")]
    NotTracePreserving { deviation: f64 },
    #[error("opening channel does not distinguish the commitments (trace distance {distance})")]
    IndistinguishableOpen { distance: f64 },
    #[error("invalid scheme file: {0}")]
    File(String),
}

pub type Result<T, E = QbcError> = std::result::Result<T, E>;
