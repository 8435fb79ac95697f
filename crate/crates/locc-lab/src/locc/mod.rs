//! Two-party session runtime: register ownership, locality enforcement,
//! classical-message metering, entanglement ledger, transcripting, and
//! exhaustive-branch evaluation.
//!
//! A [`LoccSession`] owns the joint pure state of all live registers, in
//! register order. Every unitary and measurement names a single party and
//! must touch only that party's registers; the runtime rejects anything
//! else. Classical messages are metered twice, as exact `log2(domain)` and
//! as the integer ceiling, so costs can be reported in either convention.

mod exhaustive;
mod session;

pub use exhaustive::{run_exhaustive, run_sampled, run_scripted, Branch, BRANCH_CAP};
pub use session::{
    CostSummary, Event, LoccError, LoccResult, LoccSession, Party, Register, RegisterId,
};
