use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("channel estimate magnitude {0:e} is below the singular limit")]
    SingularChannel(f64),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Convergence { achieved: f64, requested: f64 },

    #[error("threshold search failed: {0}")]
    Threshold(String),

    #[error("no closed form available for {0}")]
    NoClosedForm(&'static str),
}

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Param {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
