//! Executable two-party protocols on top of the session runtime: qubit and
//! qudit teleportation, entanglement dilution, four flavors of remote state
//! preparation, and key-averaged randomization. Every entry point returns a
//! [`ProtocolReport`] with the measured bit and ebit ledgers next to the
//! closed-form cost the protocol is compared against.

mod block;
mod grouped;
mod knowledge;
mod outcome;
mod phase;
mod pipeline;
mod quad;
mod randomize;
mod teleport;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locc::{LoccError, Party};
use crate::qcore::{Complex64, PureState, QcoreError, QcoreResult, Unitary, DEFAULT_DIM_CAP};
use crate::typspace::TypspaceError;

pub use block::{
    block_entropy, block_formula_bits, remote_prep_block, BlockPrivate, BlockShared, BlockSpec,
};
pub use grouped::{
    grouped_entropy, grouped_formula_bits, grouped_target_bits, remote_prep_grouped, GroupedCoeff,
    GroupedPrivate, GroupedShared, GroupedSpec,
};
pub use knowledge::{KnowledgeSpec, PartyView};
pub use outcome::{BranchFidelity, ProtocolReport, RunOutcome};
pub use phase::{
    folded_average_state, folded_ensemble_entropy, phase_entropy, phase_formula_bits,
    remote_prep_phase, remote_prep_segmented, segmented_formula_bits, PhasePrivate, PhaseShared,
    PhaseSpec,
};
pub use quad::{
    quad_entropy, quad_formula_bits, remote_prep_quad, QuadPrivate, QuadShared, QuadSpec,
};
pub use randomize::{pauli_randomize, randomize_report, uniform_key_mixture};
pub use teleport::{
    dilute_step1_only, dilution_formula_bits, teleport_d_dim, teleport_formula_bits,
    teleport_two_stage,
};

pub type ProtocolResult<T> = Result<T, ProtocolError>;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("party {party:?} may not read sender-only spec fields")]
    KnowledgeViolation { party: Party },
    #[error("need at least one signal")]
    NoSignals,
    #[error("signal {index} is not normalized: squared norm {norm_sqr}")]
    SignalNorm { index: usize, norm_sqr: f64 },
    #[error("signal {index} has {got} amplitudes, the universe holds {want}")]
    SignalLength { index: usize, got: usize, want: usize },
    #[error("signal {index} puts weight {got} on a constrained pair of labels, the shared constant fixes {want}")]
    PairConstraint { index: usize, got: f64, want: f64 },
    #[error("signal {index} puts weight {got} on block {block}, the shared partition fixes {want}")]
    BlockWeight {
        index: usize,
        block: usize,
        got: f64,
        want: f64,
    },
    #[error("pair weight e² must lie in (0, 0.5], got {e_sq}")]
    QuadWeight { e_sq: f64 },
    #[error("partition weights must sum to 1, got {sum}")]
    PartitionWeight { sum: f64 },
    #[error("coefficients ({a}, {b}) must be nonnegative with a² + b² = 1")]
    BadSchmidtPair { a: f64, b: f64 },
    #[error("the source support holds {live} labels, need at least 2 to transmit anything")]
    DegenerateSupport { live: usize },
    #[error("carried register has dimension {got}, protocol needs {want}")]
    CarriedDimension { got: usize, want: usize },
    #[error("dimension must be at least 2, got {dim}")]
    BadDimension { dim: usize },
    #[error("signals per group must be at least 1")]
    EmptyGroup,
    #[error("signal count {got} is not a positive multiple of the group length {n1}")]
    GroupCount { got: usize, n1: usize },
    #[error("expected a single qubit, got subsystem dimensions {dims:?}")]
    SingleQubit { dims: Vec<usize> },
    #[error("key set must be nonempty")]
    EmptyKeySet,
    #[error(transparent)]
    Locc(#[from] LoccError),
    #[error(transparent)]
    Typspace(#[from] TypspaceError),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// Compression regime for the protocols that ship many signals at once.
/// Exact keeps the full support of the source; Typical keeps the strongly
/// typical strings for the given window half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Typical(f64),
}

impl Mode {
    /// Window half-width handed to the codebook builder. A width of 1 keeps
    /// every string.
    pub fn delta(self) -> f64 {
        match self {
            Mode::Exact => 1.0,
            Mode::Typical(delta) => delta,
        }
    }
}

/// How outcome branches are visited: all of them, or a seeded sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    Exhaustive,
    Sampled(usize),
}

/// Cost of shipping `nsignals` signals of the given source entropy by plain
/// teleportation, the reference every remote-preparation saving is measured
/// against.
pub fn teleport_baseline_bits(nsignals: usize, signal_entropy: f64) -> f64 {
    2.0 * nsignals as f64 * signal_entropy
}

/// Exact comparison against the identity matrix. Used to skip corrections
/// that would be no-ops, which keeps transcripts branch-comparable.
pub(crate) fn is_identity(u: &Unitary) -> bool {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    (0..u.dim()).all(|r| (0..u.dim()).all(|c| u.entry(r, c) == if r == c { one } else { zero }))
}

/// Session dimension cap for a protocol whose state never exceeds
/// `total_dim` amplitudes. Grows past the default only up to a fixed memory
/// guard; larger requests fail inside the session instead of thrashing.
pub(crate) fn dim_cap_for(total_dim: u128) -> usize {
    const MAX_AUTO: u128 = 1 << 24;
    (total_dim.min(MAX_AUTO) as usize).max(DEFAULT_DIM_CAP)
}

pub(crate) fn tensor_all(parts: &[PureState], cap: usize) -> QcoreResult<PureState> {
    let mut acc = PureState::scalar();
    for p in parts {
        acc = acc.tensor(p, cap)?;
    }
    Ok(acc)
}
