//! Command-line failures mapped onto the tool's exit-code contract.

use std::fmt;

/// Exit codes: malformed input 2, infeasible instance 3, identity
/// violation 1, everything else 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CliError {
    /// Unreadable, unparseable, or invalid spec input.
    Malformed(String),
    /// A valid spec the requested computation cannot serve.
    Infeasible(String),
    /// A verify run found an identity violation.
    Violation(String),
    /// Output plumbing failed.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Malformed(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Violation(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Malformed(m) => write!(f, "malformed input: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible instance: {m}"),
            CliError::Violation(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;

/// Spec-construction failures are the caller's fault.
pub fn malformed(e: impl fmt::Display) -> CliError {
    CliError::Malformed(e.to_string())
}

/// Failures after validation mean the instance cannot be served.
pub fn infeasible(e: impl fmt::Display) -> CliError {
    CliError::Infeasible(e.to_string())
}
