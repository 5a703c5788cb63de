use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite complex component")]
    NonFinite,

    #[error("size error: {0}")]
    Size(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("duplicate target qubit {0}")]
    DuplicateTarget(usize),

    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("payoff vector has length {found}, expected {expected}")]
    PayoffLength { expected: usize, found: usize },

    #[error("conditional distribution not normalized for types ({x}, {y}): sum {sum}")]
    Unnormalized { x: usize, y: usize, sum: f64 },

    #[error("grid step {name} = {step} does not divide its range")]
    GridStep { name: &'static str, step: f64 },

    #[error("empty strategy set")]
    EmptyStrategySet,

    #[error("profile {0:?} does not match the game")]
    Profile(Vec<usize>),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid game definition: field `{field}`: {reason}")]
    GameConfig { field: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::GameConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
