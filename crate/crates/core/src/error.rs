use thiserror::Error;

/// Errors raised by the geometry and tracing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmcError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("point ({u}, {v}) is outside the chart domain")]
    OutsideDomain { u: f64, v: f64 },
    #[error("immersion is singular at ({u}, {v})")]
    Singular { u: f64, v: f64 },
    #[error("point lies in the hyperbolic region (K = {k})")]
    Hyperbolic { k: f64 },
    #[error("point is parabolic (K = {k}); only one direction exists")]
    Parabolic { k: f64 },
    #[error("point is umbilic; the equation vanishes identically")]
    Umbilic,
    #[error("point is not umbilic (k2 - k1 = {gap})")]
    NotUmbilic { gap: f64 },
    #[error("orientation is not normalized: {0}")]
    Orientation(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("zero tangent direction")]
    ZeroDirection,
    #[error("branch ambiguity at ({u}, {v})")]
    BranchAmbiguity { u: f64, v: f64 },
    #[error("irregular parabolic point: {0}")]
    IrregularParabolic(String),
    #[error("non-hyperbolic equilibrium at slope {p}")]
    NonHyperbolic { p: f64 },
    #[error("failed to converge: {0}")]
    NoConvergence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trace failed: {0}")]
    Trace(String),
}

pub type Result<T> = std::result::Result<T, GmcError>;
