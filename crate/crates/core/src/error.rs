use thiserror::Error;

/// Errors surfaced by the allocation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("agent index {agent} out of range for n = {n}")]
    AgentOutOfRange { agent: usize, n: usize },

    #[error("instance has {m} items, exceeding the enumeration cap {cap}")]
    CapacityExceeded { m: usize, cap: usize },

    #[error("dropped {agents} agents but {items} items; counts must match")]
    CardinalityMismatch { agents: usize, items: usize },

    #[error("precondition violated for agent {agent} on item {item}: {detail}")]
    PreconditionViolation {
        agent: usize,
        item: usize,
        detail: String,
    },

    /// A state the correctness argument of an algorithm rules out. Seeing
    /// this on a valid input means the implementation is wrong.
    #[error("guarantee violated: {0}")]
    GuaranteeAlarm(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),
}

pub type Result<T> = std::result::Result<T, Error>;
