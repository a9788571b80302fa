use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: label {value} is not one of {allowed}")]
    Domain {
        line: usize,
        value: String,
        allowed: &'static str,
    },

    #[error("duplicate entry at row {row}, column {col}")]
    Duplicate { row: usize, col: usize },

    #[error("entry ({row}, {col}) lies outside a {n} x {m} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        n: usize,
        m: usize,
    },

    #[error("label matrix has no rows")]
    EmptyMatrix,

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("optimisation diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    #[error("exhaustive enumeration needs m <= {limit}, got m = {m}")]
    Infeasible { m: usize, limit: usize },

    #[error("elbow selection needs at least 3 sweep points, got {0}")]
    InsufficientPoints(usize),

    #[error("structure learning failed at epsilon = {epsilon}: {source}")]
    AtEpsilon {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by non-finite objectives or weights.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::AtEpsilon { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
