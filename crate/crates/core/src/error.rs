use crate::report::ProtocolReport;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Wrap a serialization error, keeping the underlying io kind (a closed
/// pipe while writing should stay recognizable as one).
pub(crate) fn json_io(e: serde_json::Error) -> Error {
    let kind = e.io_error_kind().unwrap_or(std::io::ErrorKind::Other);
    Error::Io(std::io::Error::new(kind, e))
}

/// Everything that can go wrong short of a verification *failure* —
/// failed checks are reported as data, not as errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field order {p}^{n} exceeds the supported bound {bound}")]
    DegreeTooLarge { p: u64, n: u32, bound: u64 },
    #[error("division by zero in GF({order})")]
    DivisionByZero { order: u64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("no construction available for dimension {0}")]
    UnsupportedDimension(usize),
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("document has wrong shape: {0}")]
    Shape(String),
    #[error("basis family fails verification: {0}")]
    InvalidFamily(Box<ProtocolReport>),
    #[error("striation table fails verification: {0}")]
    InvalidTable(Box<ProtocolReport>),
    #[error("dimension {dim} exceeds the search bound {bound}")]
    SearchBoundExceeded { dim: usize, bound: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
