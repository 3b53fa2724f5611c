use thiserror::Error;

/// Error type shared across the pipeline stages.
///
/// The CLI maps variants onto exit codes: `Config` is a usage problem,
/// `Internal` is a broken invariant, everything else is a data problem.
#[derive(Debug, Error)]
pub enum Error {
    /// A cell of an input file could not be parsed.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Input is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Degenerate input that would silently distort downstream results.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Bad configuration value or key.
    #[error("config error: {0}")]
    Config(String),

    /// Input exceeds a documented desk-scale cap of an exact solver.
    #[error("scale error: {0}")]
    Scale(String),

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
