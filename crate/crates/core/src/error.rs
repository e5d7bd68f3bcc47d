use thiserror::Error;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or sample is too short for the requested operation.
    #[error("length error: need at least {needed} samples, got {got}")]
    Length { needed: usize, got: usize },

    /// The posterior collapsed to zero everywhere on the grid.
    #[error("degenerate posterior: every grid node has zero weight")]
    DegeneratePosterior,

    /// Too few usable points to fit or average.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The true parameter lies outside the unambiguous window of the shortest
    /// interrogation time.
    #[error("dynamic-range error: {value} outside unambiguous window [{lo}, {hi})")]
    DynamicRange { value: f64, lo: f64, hi: f64 },

    /// An iterative fit failed to converge.
    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
