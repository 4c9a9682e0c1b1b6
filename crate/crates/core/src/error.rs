//! Error type shared across the simulator.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;

/// Errors surfaced by the simulator library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    /// A line address falls outside the configured address space.
    AddressRange { line: u64, limit: u64 },
    /// A configuration value is structurally invalid (bad width, non-power-of-two count, ...).
    Config(String),
    /// Inputs are inconsistent with each other (mismatched workloads, empty sweep lists, ...).
    Validation(String),
    /// An operation was invoked in a state that does not permit it.
    State(String),
    /// A trace file failed to parse; `line` is 1-based.
    TraceParse { line: usize, message: String },
    /// Underlying I/O failure, stringified so the error stays cloneable.
    Io(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::AddressRange { line, limit } => {
                write!(
                    f,
                    "line address {line:#x} outside address space of {limit:#x} lines"
                )
            }
            SimError::Config(msg) => write!(f, "configuration error: {msg}"),
            SimError::Validation(msg) => write!(f, "validation error: {msg}"),
            SimError::State(msg) => write!(f, "state error: {msg}"),
            SimError::TraceParse { line, message } => {
                write!(f, "trace parse error at line {line}: {message}")
            }
            SimError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<std::io::Error> for SimError {
    fn from(err: std::io::Error) -> Self {
        SimError::Io(err.to_string())
    }
}
