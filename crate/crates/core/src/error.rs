use thiserror::Error;

use crate::fit::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation point within the exclusion radius of a point source.
    #[error("evaluation point {point:?} coincides with a spin at {spin:?}")]
    CoincidentPoint { point: [f64; 3], spin: [f64; 3] },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rate-equation system is singular")]
    SingularSystem,

    /// A resonance-shift measurement needs both fits to converge.
    #[error("fit did not converge (with sample: {}, reference: {})", .with_sample.converged, .reference.converged)]
    FitFailed {
        with_sample: Box<FitResult>,
        reference: Box<FitResult>,
    },

    #[error("reference resonance could not be fitted (converged: {})", .0.converged)]
    ReferenceFit(Box<FitResult>),

    #[error("scan failed: {failed} of {total} pixels did not converge")]
    ScanFailed { failed: usize, total: usize },

    #[error("no ODMR contrast: {0}")]
    NoContrast(String),

    #[error("no dominant peak: {0}")]
    NoPeak(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
