use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("jet has a nonzero constant term")]
    ConstantTerm,

    #[error("reparametrization is not invertible (zero linear coefficient)")]
    NotInvertible,

    #[error("component {0} is identically zero up to the truncation order")]
    DegenerateComponent(usize),

    #[error("malformed multigerm: {0}")]
    Malformed(String),

    #[error("level {level} exceeds the truncation order {truncation}")]
    LevelTooHigh { level: u32, truncation: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("semigroup not certified below order {0}; raise the truncation")]
    IncompleteSemigroup(u32),

    #[error("unknown catalog entry {0}")]
    UnknownEntry(String),

    #[error("constraint violated for {id}: {constraint}")]
    ConstraintViolated { id: String, constraint: String },

    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl Error {
    /// Whether the error stems from the caller's input rather than the engine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
