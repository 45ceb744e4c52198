use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Gouy phase makes the lever blind to tilt (sin ζ = 0).
    #[error("singular transduction: sin(gouy_shift) = 0 for gouy_shift = {0} rad")]
    SingularTransduction(f64),

    /// Two spectra that must share a frequency grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A fit failed to converge or its input was degenerate.
    #[error("fit failed: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Fails with a domain error unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be finite and > 0 (got {value})"))
    }
}

pub(crate) fn require_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be finite and >= 0 (got {value})"))
    }
}
