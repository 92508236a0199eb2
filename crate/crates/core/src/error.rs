use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NonPsd { min_eigenvalue: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("ladder expression degree {degree} exceeds the padded limit of 4")]
    DegreeTooHigh { degree: usize },

    #[error("effective cutoff not reached below D_max = {d_max}")]
    CutoffNotReached { d_max: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("hamiltonian coefficients inconsistent with covariance (max deviation {deviation:e})")]
    Integrity { deviation: f64 },

    #[error("spectrum is not harmonic: eigenvalue {eigenvalue} is {distance} from the nearest integer")]
    SpectrumNotHarmonic { eigenvalue: f64, distance: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
