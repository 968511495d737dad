use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(usize),

    #[error("element {value} out of range for GF({q})")]
    ElementOutOfRange { value: usize, q: usize },

    #[error("0 has no multiplicative inverse")]
    NoInverse,

    #[error("row {row}: probabilities sum to {sum}, expected 1")]
    RowSum { row: String, sum: f64 },

    #[error("row {row}: negative or non-finite entry {value} at output {output}")]
    BadEntry {
        row: String,
        output: usize,
        value: f64,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error(
        "output alphabet of {columns} columns exceeds cap {cap} at path '{path}'; use the Monte Carlo estimator"
    )]
    CapacityExceeded {
        columns: usize,
        cap: usize,
        path: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Attach a transform path to a capacity error raised deeper in the tree.
    pub fn with_path(self, path: &str) -> Self {
        match self {
            Error::CapacityExceeded { columns, cap, .. } => Error::CapacityExceeded {
                columns,
                cap,
                path: path.to_string(),
            },
            other => other,
        }
    }
}
