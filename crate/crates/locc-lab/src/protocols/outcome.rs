//! Report assembly. Every protocol run family collapses into one measured
//! bit ledger, one ebit ledger, and a fidelity per branch; the summarizers
//! here also enforce the cross-branch bookkeeping rules shared by all
//! protocols.

use serde::Serialize;
use serde_json::Value;

use crate::locc::{Branch, CostSummary};

use super::Mode;

/// Per-branch result handed back by a protocol procedure.
#[derive(Debug, Clone, Copy)]
pub struct RunOutcome {
    /// Fidelity of the receiver's final registers against the goal state.
    pub fidelity: f64,
    /// Fidelity of the shared registers after the first stage, before any
    /// compression, when the protocol has a meaningful intermediate target.
    pub step1_fidelity: Option<f64>,
}

/// One row of a report's branch table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchFidelity {
    pub prob: f64,
    pub fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step1_fidelity: Option<f64>,
}

/// Measured costs and fidelities of one protocol configuration next to the
/// closed-form cost it is compared against. Field order is part of the
/// serialized interface.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub protocol: String,
    pub params: Value,
    pub bits_exact: f64,
    pub bits_ceiling: u64,
    pub ebits: f64,
    pub fidelity_expected: f64,
    pub fidelity_branches: Vec<BranchFidelity>,
    pub formula_bits: f64,
    pub formula_ref: String,
    pub mode: Mode,
    pub seed: u64,
}

impl ProtocolReport {
    /// Stable pretty JSON, newline terminated. Contains nothing
    /// time-dependent, so equal runs serialize to equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report fields all serialize");
        s.push('\n');
        s
    }
}

/// Ledger and fidelity aggregates shared by every protocol entry point.
#[derive(Debug, Clone)]
pub(crate) struct Evaluated {
    pub bits_exact: f64,
    pub bits_ceiling: u64,
    pub ebits: f64,
    pub fidelity_expected: f64,
    pub branches: Vec<BranchFidelity>,
}

/// Costs must agree across branches: messages are metered by domain, not by
/// content, and provisioning happens before the first measurement.
fn uniform_costs(costs: &[&CostSummary]) -> (f64, u64, f64) {
    let first = costs[0];
    for c in costs {
        assert_eq!(c.bits_b_to_a, 0.0, "no receiver-to-sender messages");
        assert!(
            (c.bits_a_to_b - first.bits_a_to_b).abs() <= 1e-9,
            "message schedule must not depend on outcomes"
        );
        assert_eq!(c.bits_a_to_b_ceiling, first.bits_a_to_b_ceiling);
        assert!(
            (c.ebits_consumed - first.ebits_consumed).abs() <= 1e-9,
            "entanglement use must not depend on outcomes"
        );
    }
    (first.bits_a_to_b, first.bits_a_to_b_ceiling, first.ebits_consumed)
}

pub(crate) fn summarize_branches(branches: &[Branch<RunOutcome>]) -> Evaluated {
    assert!(!branches.is_empty());
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    assert!(
        (total - 1.0).abs() <= 1e-9,
        "branch probabilities must sum to 1, got {total}"
    );
    let costs: Vec<&CostSummary> = branches.iter().map(|b| &b.costs).collect();
    let (bits_exact, bits_ceiling, ebits) = uniform_costs(&costs);
    let rows: Vec<BranchFidelity> = branches
        .iter()
        .map(|b| BranchFidelity {
            prob: b.probability,
            fidelity: b.value.fidelity,
            step1_fidelity: b.value.step1_fidelity,
        })
        .collect();
    let expected: f64 = rows.iter().map(|r| r.prob * r.fidelity).sum();
    assert!(
        (-1e-12..=1.0 + 1e-9).contains(&expected),
        "expected fidelity out of range: {expected}"
    );
    Evaluated {
        bits_exact,
        bits_ceiling,
        ebits,
        fidelity_expected: expected,
        branches: rows,
    }
}

pub(crate) fn summarize_samples(rows: &[(RunOutcome, CostSummary)]) -> Evaluated {
    assert!(!rows.is_empty());
    let costs: Vec<&CostSummary> = rows.iter().map(|(_, c)| c).collect();
    let (bits_exact, bits_ceiling, ebits) = uniform_costs(&costs);
    let mean = rows.iter().map(|(o, _)| o.fidelity).sum::<f64>() / rows.len() as f64;
    assert!(
        (-1e-12..=1.0 + 1e-9).contains(&mean),
        "mean fidelity out of range: {mean}"
    );
    Evaluated {
        bits_exact,
        bits_ceiling,
        ebits,
        fidelity_expected: mean,
        branches: Vec::new(),
    }
}
