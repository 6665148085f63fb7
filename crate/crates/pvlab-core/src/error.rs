use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    /// A Gram or covariance matrix was too close to singular to invert
    /// without regularization.
    #[error("ill-conditioned system: smallest eigenvalue {eigenvalue:e} (largest {largest:e})")]
    Conditioning { eigenvalue: f64, largest: f64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("training diverged at epoch {epoch}; loss trace {trace:?}")]
    Divergence { epoch: usize, trace: Vec<f64> },

    #[error(
        "gradient check failed at parameter {index}: analytic {analytic:e}, numeric {numeric:e}, relative error {relative:e}"
    )]
    GradientCheck {
        index: usize,
        analytic: f64,
        numeric: f64,
        relative: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
