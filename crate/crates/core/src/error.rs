use thiserror::Error;

/// Validation failures raised by the in-memory model types and algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a roster needs at least two vertices, got {0}")]
    RosterTooSmall(usize),

    #[error("duplicate vertex label {0:?}")]
    DuplicateLabel(String),

    #[error("invalid adjacency matrix: {0}")]
    InvalidAdjacency(String),

    #[error("invalid dyad state value {0} (expected -1, 0 or 1)")]
    InvalidState(i64),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("concentration {name} must be strictly positive and finite, got {value}")]
    InvalidConcentration { name: &'static str, value: f64 },

    #[error("dyad {dyad} has zero conditional mass in every state")]
    DegenerateConditional { dyad: usize },

    #[error("enumeration over {dyads} dyads exceeds the cap of {max} dyads")]
    TooManyDyads { dyads: usize, max: usize },

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("no retained chain states to summarize")]
    EmptyChains,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
