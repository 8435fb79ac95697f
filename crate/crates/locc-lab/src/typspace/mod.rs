//! Typical sets, compression codebooks, and block partitions of basis-index
//! sets: the combinatorial machinery behind block-coded state preparation.
//!
//! Typicality is the strong flavor: a length-n string over the alphabet is
//! typical when every symbol's empirical frequency sits within `delta` of
//! its target probability. With `delta >= 1` the window is the whole space,
//! which gives exact (lossless) compression at small n.

mod codebook;
mod compress;
mod partition;
mod typical;

pub use codebook::Codebook;
pub use compress::{schumacher_compress, schumacher_decompress};
pub use partition::{position_partition, BlockPartition};
pub use typical::{typical_set, typical_weight, TypicalSet};

use thiserror::Error;

use crate::locc::LoccError;

/// Cap on alphabet^n when a typical set must be materialized.
pub const ENUM_CAP: usize = 1 << 24;

pub type TypspaceResult<T> = Result<T, TypspaceError>;

#[derive(Debug, Error)]
pub enum TypspaceError {
    #[error("probabilities must be nonnegative and sum to 1, got sum {sum}")]
    BadProbabilities { sum: f64 },
    #[error("need at least one copy")]
    NoCopies,
    #[error("delta must be nonnegative, got {delta}")]
    BadDelta { delta: f64 },
    #[error("typical set is empty at n = {n}, delta = {delta}")]
    EmptyTypicalSet { n: usize, delta: f64 },
    #[error("alphabet^n = {requested} exceeds the enumeration cap {cap}")]
    UniverseTooLarge { requested: u128, cap: usize },
    #[error("codebook needs at least 2 codewords, got {size}")]
    DegenerateCodebook { size: usize },
    #[error("codebook alphabet {expected} does not match register dimension {got}")]
    AlphabetMismatch { expected: usize, got: usize },
    #[error("expected {expected} registers, got {got}")]
    RegisterCount { expected: usize, got: usize },
    #[error("block index {index} outside universe {universe}")]
    BadBlockIndex { index: usize, universe: usize },
    #[error("blocks overlap at index {index}")]
    OverlappingBlocks { index: usize },
    #[error("partition needs at least one nonempty block")]
    EmptyPartition,
    #[error("block weights must lie in [0,1] and sum to at most 1, got sum {sum}")]
    BadWeights { sum: f64 },
    #[error("concentration weight must lie strictly between 0 and 1, got {value}")]
    BadConcentration { value: f64 },
    #[error(transparent)]
    Locc(#[from] LoccError),
    #[error(transparent)]
    Qcore(#[from] crate::qcore::QcoreError),
}
