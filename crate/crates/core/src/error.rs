use thiserror::Error;

/// Errors produced by the modelling, solving and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, got {got}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("metabolite m{} not connected to p", index + 1)]
    MetaboliteNotConnected { index: usize },

    #[error("time step underflow at t = {time}: step {step} is below {min_step}")]
    Progress { time: f64, step: f64, min_step: f64 },

    #[error("solution diverged at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn dims(field: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            field: field.into(),
            expected,
            got,
        }
    }

    /// True for errors caused by the numerics (divergence, non-finite values,
    /// step underflow) rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::Progress { .. } | Error::Divergence { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(field: &str, expected: usize, got: &[f64]) -> Result<()> {
    if got.len() != expected {
        return Err(Error::dims(field, expected, got.len()));
    }
    Ok(())
}
