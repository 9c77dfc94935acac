use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape metadata is inconsistent, or two operands disagree on shape.
    #[error("shape error: {0}")]
    Shape(String),

    /// A value violates a domain invariant (non-finite sample, non-positive weight).
    #[error("validation error: {0}")]
    Validation(String),

    /// Solver or generator parameters are mathematically unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative routine failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed tensor or image file.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!(
        "{what}: {}x{} does not match {}x{}",
        a.0, a.1, b.0, b.1
    ))
}
