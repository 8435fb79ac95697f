//! Closed-form cost lookup by protocol name. Values are exact evaluations
//! of the per-protocol cost expressions, so tables can put the asymptotic
//! target next to measured ledgers without rerunning anything.

use serde::Serialize;
use serde_json::Value;

use crate::protocols::{
    block_formula_bits, dilution_formula_bits, grouped_formula_bits, phase_formula_bits,
    quad_formula_bits, segmented_formula_bits, teleport_baseline_bits, teleport_formula_bits,
};
use crate::typspace::BlockPartition;

use super::{ReportError, ReportResult};

/// One evaluated formula, named the way the matching report names it.
#[derive(Debug, Clone, Serialize)]
pub struct FormulaValue {
    pub protocol: String,
    pub params: Value,
    pub formula_bits: f64,
    pub formula_ref: String,
}

impl FormulaValue {
    /// Stable pretty JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("formula fields all serialize");
        s.push('\n');
        s
    }
}

fn opt_f64(params: &Value, field: &'static str) -> ReportResult<Option<f64>> {
    match params.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| ReportError::BadField {
            field: field.into(),
            why: format!("expected a number, got {v}"),
        }),
    }
}

fn req_f64(params: &Value, protocol: &str, field: &'static str) -> ReportResult<f64> {
    opt_f64(params, field)?.ok_or_else(|| ReportError::MissingField {
        protocol: protocol.into(),
        field,
    })
}

fn opt_usize(params: &Value, field: &'static str, default: usize) -> ReportResult<usize> {
    match params.get(field) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| {
            ReportError::BadField {
                field: field.into(),
                why: format!("expected a nonnegative integer, got {v}"),
            }
        }),
    }
}

/// Evaluates the named protocol's cost expression on the given parameters.
/// `nsignals` defaults to 1 everywhere, so the bare value is per signal.
pub fn formula(name: &str, params: &Value) -> ReportResult<FormulaValue> {
    let n = opt_usize(params, "nsignals", 1)?;
    let (bits, formula_ref) = match name {
        "teleport" | "teleport-d" => {
            let d = opt_usize(params, "d", 2)?;
            (n as f64 * teleport_formula_bits(d), "two_log2_d_bits")
        }
        "dilute" => {
            let d = opt_usize(params, "d", 2)?;
            (n as f64 * dilution_formula_bits(d), "log2_d_bits")
        }
        "rsp-phase" => {
            let b_sq = req_f64(params, name, "b_sq")?;
            (phase_formula_bits(n, b_sq)?, "entropy_rate")
        }
        "rsp-segmented" => {
            let b_sq = req_f64(params, name, "b_sq")?;
            (segmented_formula_bits(n, b_sq)?, "entropy_rate_plus_flag")
        }
        "rsp-quad" => {
            let e_sq = req_f64(params, name, "e_sq")?;
            (quad_formula_bits(n, e_sq)?, "one_plus_entropy_rate")
        }
        "rsp-block" => {
            let partition = partition_from(params, name)?;
            (block_formula_bits(n, &partition), "lcm_plus_entropy_rate")
        }
        "rsp-grouped" => {
            let c_sq = req_f64(params, name, "c_sq")?;
            (grouped_formula_bits(n, c_sq)?, "grouped_entropy_rate")
        }
        "pauli-randomize" => (2.0, "two_bit_key"),
        "teleport-baseline" => {
            let entropy = req_f64(params, name, "entropy")?;
            (teleport_baseline_bits(n, entropy), "twice_entropy_rate")
        }
        other => {
            return Err(ReportError::UnknownProtocol { name: other.into() });
        }
    };
    Ok(FormulaValue {
        protocol: name.into(),
        params: params.clone(),
        formula_bits: bits,
        formula_ref: formula_ref.into(),
    })
}

pub(super) fn partition_from(params: &Value, protocol: &str) -> ReportResult<BlockPartition> {
    let universe = opt_usize(params, "universe", 0)?;
    if universe == 0 {
        return Err(ReportError::MissingField {
            protocol: protocol.into(),
            field: "universe",
        });
    }
    let blocks: Vec<Vec<usize>> = match params.get("blocks") {
        None | Some(Value::Null) => {
            return Err(ReportError::MissingField {
                protocol: protocol.into(),
                field: "blocks",
            });
        }
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| ReportError::BadField {
            field: "blocks".into(),
            why: e.to_string(),
        })?,
    };
    let weights: Vec<f64> = match params.get("weights") {
        None | Some(Value::Null) => {
            return Err(ReportError::MissingField {
                protocol: protocol.into(),
                field: "weights",
            });
        }
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| ReportError::BadField {
            field: "weights".into(),
            why: e.to_string(),
        })?,
    };
    BlockPartition::new(universe, blocks, weights).map_err(|e| ReportError::BadField {
        field: "blocks".into(),
        why: e.to_string(),
    })
}
