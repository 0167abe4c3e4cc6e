use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("invalid action {action} (expected < {limit})")]
    InvalidAction { action: usize, limit: usize },
    #[error("incompatible trees: {0}")]
    IncompatibleTrees(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("empty proposal list")]
    EmptyProposals,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("environment fault: {0}")]
    Environment(String),
    #[error("invalid config field `{field}`: {msg}")]
    InvalidConfig { field: String, msg: String },
    #[error("no valid individual was produced during the whole run")]
    NoValidSolution,
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
