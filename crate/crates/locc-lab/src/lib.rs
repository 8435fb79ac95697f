//! Simulation of two-party quantum protocols restricted to local operations
//! and one-way (Alice to Bob) classical communication, with exact accounting
//! of classical bits and consumed entanglement.
//!
//! The crate is layered bottom-up:
//!
//! * [`qcore`]: dense state vectors over mixed-radix composite systems,
//!   unitaries, measurement, density matrices, entropies.
//! * [`locc`]: the two-party session runtime. Registers carry an owner;
//!   locality is enforced on every operation; classical messages and
//!   entangled resources are metered in ledgers; runs are transcripted and
//!   replayable, and measurement branches can be evaluated exhaustively.
//! * [`typspace`]: strongly typical sets, lexicographic codebooks,
//!   block-structured index partitions, and in-session compression.
//! * [`protocols`]: the protocol library built on the layers above
//!   (teleportation, entanglement dilution, remote state preparation
//!   families, Pauli randomization).
//! * [`report`]: run configs, cost formulas, sweeps, and the CLI surface.

pub mod locc;
pub mod protocols;
pub mod qcore;
pub mod report;
pub mod typspace;
