use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate level h = {h}: {reason}")]
    Degenerate { h: f64, reason: String },

    #[error("pole: {0}")]
    Pole(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("singular matrix at h = {h} (condition number {condition:e})")]
    SingularMatrix { h: f64, condition: f64 },

    #[error("path comes within {distance:e} of the singular point {point}")]
    Proximity { point: f64, distance: f64 },

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("unsupported moment index ({i}, {j})")]
    UnsupportedIndex { i: i32, j: i32 },

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("orbit left the domain at t = {0}")]
    OmegaExit(f64),

    #[error("orbit blew up at t = {0}")]
    BlowUp(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
