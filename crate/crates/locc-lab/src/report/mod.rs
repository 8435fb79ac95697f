//! Run configs, the closed-form cost library, sweeps with cost tables, and
//! the file plumbing behind the command line. Everything here is
//! deterministic: a config plus a seed fixes every emitted byte.

mod config;
mod formulas;
mod run;

use thiserror::Error;

use crate::protocols::ProtocolError;

pub use config::{CurveSpec, GenSpec, RunConfig, Source};
pub use formulas::{formula, FormulaValue};
pub use run::{run, sweep, CostRow, CostTable, RunArtifacts, CSV_HEADER};

pub type ReportResult<T> = Result<T, ReportError>;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown protocol {name:?}")]
    UnknownProtocol { name: String },
    #[error("protocol {protocol} needs field {field}")]
    MissingField {
        protocol: String,
        field: &'static str,
    },
    #[error("field {field}: {why}")]
    BadField { field: String, why: String },
    #[error("field {field} is not a parameter of {protocol}")]
    UnusedField {
        protocol: String,
        field: &'static str,
    },
    #[error("parameter {param:?} is not sweepable; choose one of {supported}")]
    BadSweepParam { param: String, supported: &'static str },
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("writing {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}
