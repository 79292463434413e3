use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graphon spec: {0}")]
    InvalidSpec(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("subset has {got} vertices, motif needs {expected}")]
    SubsetSize { expected: usize, got: usize },
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("{what} exceeds the size bound {bound}")]
    TooLarge { what: String, bound: u64 },
    #[error("degenerate variance: {0}")]
    Degenerate(String),
    #[error("local statistics lack the pairwise table")]
    MissingPairwise,
    #[error("local statistics lack the instance list")]
    MissingInstances,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{got} replicates, at least {min} needed")]
    TooFewReplicates { got: usize, min: usize },
    #[error("missing expansion coefficients: {0}")]
    MissingCoefficients(String),
    #[error("missing truth value: {0}")]
    MissingTruth(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::SubsetSize { .. } => "subset_size",
            Error::InvalidSubset(_) => "invalid_subset",
            Error::TooLarge { .. } => "too_large",
            Error::Degenerate(_) => "degenerate",
            Error::MissingPairwise => "missing_pairwise",
            Error::MissingInstances => "missing_instances",
            Error::Unsupported(_) => "unsupported",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::TooFewReplicates { .. } => "too_few_replicates",
            Error::MissingCoefficients(_) => "missing_coefficients",
            Error::MissingTruth(_) => "missing_truth",
        }
    }
}
