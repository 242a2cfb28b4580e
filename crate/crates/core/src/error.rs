use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed model or parameter document.
    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("model is invalid ({} violation(s)); first: {}", .0.violations.len(), .0.first_message())]
    Validation(ValidationReport),

    #[error("unknown (state, action) key: ({state}, {action})")]
    UnknownKey { state: String, action: String },

    /// An iterative scheme hit its iteration cap. Carries the last iterate.
    #[error("no convergence after {iterations} iterations (last sup-norm step {step:e})")]
    NonConvergence {
        iterations: usize,
        step: f64,
        last: Box<Vec<f64>>,
    },

    /// A chain of impulses did not reach a gradual state.
    #[error("improper intervention chain from state `{state}`: {reason}")]
    ImproperChain { state: String, reason: String },

    #[error("policy is infeasible at state `{state}`: {reason}")]
    InfeasiblePolicy { state: String, reason: String },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The carrier coefficients are not nondecreasing.
    #[error("coefficient {coefficient} decreases at carrier count c = {c}")]
    NotMonotone { c: usize, coefficient: &'static str },

    #[error("carrier operator is not a contraction: modulus d = {d} >= 1")]
    NotContraction { d: f64 },
}
