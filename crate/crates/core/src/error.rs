use thiserror::Error;

/// Errors produced by state, channel, geometry and capacity routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("invalid channel: completeness residual {residual:.3e} exceeds {tol:.0e}")]
    InvalidChannel { residual: f64, tol: f64 },

    #[error("malformed channel: {0}")]
    MalformedChannel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("problem too large: {0}")]
    Size(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
