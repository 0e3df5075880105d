use thiserror::Error;

/// Errors raised by the repeater models and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{param} = {value} is outside its domain: {reason}")]
    Domain {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("lossless limit (eta = 1): P0 undefined by the USD success formula")]
    LosslessLimit,

    #[error("invalid Bell-diagonal state: {0}")]
    InvalidState(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid protocol configuration: {0}")]
    Config(String),

    #[error("purified rate requested with k = 0 rounds; use the unpurified rate instead")]
    NoPurificationRounds,

    #[error("exhaustive enumeration refused for n = {n} (limit {limit}); use the closed form")]
    EnumerationTooLarge { n: usize, limit: usize },

    #[error("qubit index {index} out of range for a {qubits}-qubit register")]
    QubitIndex { index: usize, qubits: usize },

    #[error("{0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(param: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        param,
        value,
        reason,
    }
}
