use thiserror::Error;

/// Errors raised by the model, the closed forms and the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model: {0}")]
    ModelInvalid(String),

    /// A quantity that is non-negative by construction came out negative.
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("division domain: {0}")]
    DivisionDomain(String),

    #[error("no sign change of CH on [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} is not finite ({value})")))
    }
}

pub(crate) fn ensure_probability(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {value} is outside [0, 1]")))
    }
}
