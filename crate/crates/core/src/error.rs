use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IzoError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    Construction(String),

    #[error("invalid smoothing shape: {0}")]
    Shape(String),

    #[error("projection contract violated: {0}")]
    Contract(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite iterate at k={k}: {detail}")]
    NonFinite { k: usize, detail: String },

    /// The function value overflowed at a finite query point.
    #[error("overflow: {0}")]
    Overflow(String),

    #[error("factorization failed at pivot {pivot} (value {value:e})")]
    Factorization { pivot: usize, value: f64 },

    #[error("strong-convexity estimation failed: LP status {0:?}")]
    Estimation(crate::tau::LpStatus),
}

pub type Result<T, E = IzoError> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(IzoError::Dimension(format!("{what}: expected length {expected}, got {got}")));
    }
    Ok(())
}
