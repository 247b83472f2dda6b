use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("elementary region has no sites")]
    EmptyRegion,

    #[error("region is not contained in the ambient region")]
    NotSubset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("region leaves the disorder window")]
    WindowMismatch,

    #[error("unsupported distribution `{0}`")]
    UnsupportedDistribution(String),

    #[error("energy {energy} lies within {distance:e} of the spectrum")]
    NearSingular { energy: f64, distance: f64 },

    #[error("{sites} sites exceed the dense cap of {cap}")]
    CapExceeded { sites: usize, cap: usize },

    #[error("operation is defined for the Schrödinger model only")]
    WaveModelRejected,

    #[error("boundary leak {weight:e} at t = {time}")]
    BoundaryLeak { time: f64, weight: f64 },

    #[error("step too large: error estimate {estimate:e} exceeds budget {budget:e}")]
    StepTooLarge { estimate: f64, budget: f64 },

    #[error("boxes overlap")]
    OverlappingBoxes,

    #[error("initial scale {scale} gives {sites} sites, above the cap {cap}")]
    ScheduleTooLarge { scale: usize, sites: usize, cap: usize },

    #[error("iterative solver did not converge")]
    NoConvergence,
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
