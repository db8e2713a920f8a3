use std::path::PathBuf;

/// Errors produced by ecolab operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// A domain invariant does not hold; the message names the violated invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown world id `{0}`")]
    UnknownWorld(String),

    #[error(
        "non-transitive tolerance relation: d({a},{b}) <= tol and d({b},{c}) <= tol but d({a},{c}) > tol; lower tol or use 0"
    )]
    NonTransitive { a: String, b: String, c: String },

    #[error("out of enumerable range: {0}")]
    OutOfRange(String),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("cell {cell} has {size} members; bipartition enumeration is limited to {limit}")]
    CellTooLarge { cell: usize, size: usize, limit: usize },

    #[error("nonpositive fitness {value} for genotype {genotype}")]
    NonpositiveFitness { genotype: String, value: f64 },

    #[error("all fitness values are zero")]
    ZeroFitness,

    #[error("no finite certificate: gamma ({gamma}) must exceed eps_opt ({eps_opt})")]
    NoFiniteCertificate { gamma: f64, eps_opt: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
