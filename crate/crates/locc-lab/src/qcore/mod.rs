//! Dense linear-algebra core: pure states over mixed-radix composite systems,
//! unitaries and a small gate library, density matrices and entropies.
//!
//! Conventions used throughout the crate:
//!
//! * A composite system is a list of subsystem dimensions `dims`; basis index
//!   `i` encodes the label tuple in mixed radix with the **leftmost subsystem
//!   most significant**.
//! * All values are immutable after construction; operations return new
//!   values.

mod density;
mod state;
mod unitary;

pub use density::{binary_entropy, shannon_entropy, trace_distance, DensityMatrix};
pub use num_complex::Complex64;
pub use state::PureState;
pub use unitary::Unitary;

use thiserror::Error;

/// Tolerance for algebraic identities: norms, unitarity, Hermiticity,
/// orthonormality, fidelity targets.
pub const ALGEBRAIC_TOL: f64 = 1e-9;

/// Probabilities below this floor are treated as numerically zero; branch
/// enumeration prunes them.
pub const PROB_FLOOR: f64 = 1e-12;

/// Default cap on the total amplitude count of any composite state.
/// Overridable where a runtime is constructed.
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

pub type QcoreResult<T> = Result<T, QcoreError>;

#[derive(Debug, Error)]
pub enum QcoreError {
    #[error("amplitude vector has length {got}, expected {expected} for the given dimensions")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("state norm squared is {norm_sqr}, outside 1 ± {ALGEBRAIC_TOL}")]
    NotNormalized { norm_sqr: f64 },
    #[error("total dimension {requested} exceeds the cap of {cap} amplitudes")]
    DimensionCap { requested: usize, cap: usize },
    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },
    #[error("duplicate subsystem index {index} in target list")]
    DuplicateSubsystem { index: usize },
    #[error("empty subsystem target list")]
    EmptyTargets,
    #[error("operator dimension {got} does not match the target subspace dimension {expected}")]
    OperatorDimMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary: max deviation of U\u{2020}U from identity is {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("prescribed columns are not orthonormal: max Gram deviation {deviation:.3e}")]
    NotOrthonormal { deviation: f64 },
    #[error("column index {index} invalid for dimension {dim} or prescribed more than once")]
    BadColumn { index: usize, dim: usize },
    #[error("vector of length {got} does not match dimension {expected}")]
    VectorLength { expected: usize, got: usize },
    #[error("dimensions do not match: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("value {value} outside the domain {domain}")]
    DomainViolation { value: f64, domain: &'static str },
    #[error("matrix is not Hermitian: max deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1 within {ALGEBRAIC_TOL}")]
    BadTrace { trace: f64 },
    #[error("matrix has eigenvalue {value:.3e} below zero")]
    NegativeEigenvalue { value: f64 },
    #[error("measurement class {class} out of range for {count} classes")]
    BadOutcomeClass { class: usize, count: usize },
    #[error("permutation is not a bijection on 0..{dim}")]
    BadPermutation { dim: usize },
    #[error("relabel map sends two populated basis values to the same target, joint value {value}")]
    RelabelConflict { value: usize },
    #[error("relabel map drops {lost:.3e} of the state's weight")]
    RelabelWeightLost { lost: f64 },
}
