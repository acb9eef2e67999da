use thiserror::Error;

/// Errors produced by the co-regularization library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("materializing a {rows}x{cols} operator exceeds the budget of {budget} entries")]
    BudgetExceeded {
        rows: usize,
        cols: usize,
        budget: usize,
    },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("wavelet basis dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subgradient value {value} at index {index} violates the box bound {bound}")]
    BoxViolation {
        index: usize,
        value: f64,
        bound: f64,
    },

    #[error("subgradient has no margin: every index is saturated")]
    NoMargin,

    #[error("vector is not a subgradient of the weighted l1 norm at h*: {0}")]
    InvalidSubgradient(String),

    #[error(
        "linear solve failed in {context}: residual {residual:e} after {iterations} iterations"
    )]
    LinearSolve {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("operator cannot be inverted: {0}")]
    NotInvertible(String),

    #[error("rate constants undefined: {0}")]
    UndefinedConstants(String),

    #[error("descriptor parse error: {0}")]
    Descriptor(String),

    #[error("malformed record file: {0}")]
    Parse(String),

    #[error("sweep aborted at delta={delta:e}, trial {trial}: {source}")]
    Sweep {
        delta: f64,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}
