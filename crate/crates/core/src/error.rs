//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("branch {index} ({from}-{to}) has r = x = 0 and cannot be stamped")]
    SingularBranch { index: usize, from: i32, to: i32 },

    #[error("network reduction failed: interior admittance block is numerically singular (pivot ratio {pivot_ratio:.3e})")]
    SingularReduction { pivot_ratio: f64 },

    #[error("coverage violated: generator at bus {bus} has no switched line satisfying rule {rule}")]
    Coverage { bus: i32, rule: &'static str },

    #[error("infeasible coverage: generator at bus {bus} has no candidate line under rule {rule}")]
    InfeasibleCoverage { bus: i32, rule: &'static str },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("optimizer stalled: backtracking found no acceptable step (best lambda {best_lambda:.3e}, descent violation {violation:.3e})")]
    Stall { best_lambda: f64, violation: f64 },

    #[error("simulation diverged at t = {0}")]
    Diverged(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
