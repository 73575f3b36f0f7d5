use thiserror::Error;

/// Errors produced by the chain model, the transfer engine and the
/// experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel {step} row {row} sums to {sum} (must be 1 within 1e-12; rows are never renormalized)")]
    NotStochastic { step: usize, row: usize, sum: f64 },

    #[error("invalid chain specification: {0}")]
    InvalidSpec(String),

    #[error("index {index} for {what} outside [{min}, {max}]")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate variance (sigma = {sigma:e})")]
    DegenerateVariance { sigma: f64 },

    #[error("point z = {z} lies outside the disk |z| <= {radius}")]
    OutOfDisk { z: String, radius: f64 },

    #[error("no convergence at index {index}: residual {residual:e}")]
    NonConvergence { index: usize, residual: f64 },

    #[error("branch tracking failed at index {index}: argument jump {jump} exceeds pi/2")]
    Branch { index: usize, jump: f64 },

    #[error("distribution function is not monotone at position {0}")]
    NonMonotone(usize),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Attaches a short description of the failing step to an error.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| Error::Context {
            context: what.to_string(),
            source: Box::new(e),
        })
    }
}
