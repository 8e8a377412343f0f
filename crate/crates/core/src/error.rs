use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BmoError {
    /// A caller broke an operation's input contract (lengths, indices).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid initialization: {0}")]
    InvalidInit(String),

    #[error("non-finite fitness {value} for agent {agent} at position {position:?} (t = {t})")]
    NonFinite {
        agent: usize,
        position: Vec<f64>,
        t: u64,
        value: f64,
    },

    #[error("trace line {line}: {message}")]
    TraceFormat { line: usize, message: String },
}

pub type Result<T, E = BmoError> = std::result::Result<T, E>;
