//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, scenario parsing and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// A layer violates a material invariant (non-positive permittivity, ...).
    #[error("layer {index}: {reason}")]
    InvalidLayer { index: usize, reason: String },

    /// The impedance evaluation overflowed or produced a non-finite value.
    #[error("impedance of layer {index} is not finite")]
    NonFiniteImpedance { index: usize },

    /// Impedances at a boundary sum to zero, so the reflection coefficient
    /// is undefined.
    #[error("degenerate impedance pair at boundary {index}: eta_prev + eta_cur = 0")]
    DegenerateBoundary { index: usize },

    /// Surface reflection has zero magnitude; normalization is undefined.
    #[error("surface reflection coefficient is zero; cannot normalize to surface")]
    ZeroSurfaceReflection,

    /// Observation angle outside the array field of view.
    #[error("angle {0} deg outside [-90, 90]")]
    AngleOutOfRange(f64),

    /// The temporal horizon is too short to hold the layer band.
    #[error("horizon N = {horizon} shorter than layer count L = {layers}")]
    HorizonTooShort { horizon: usize, layers: usize },

    /// A matrix handed to the solver or covariance constructor is invalid.
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// An optimization problem violates its structural contract.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The interior-point solver broke down numerically.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// A scenario file failed to parse or validate.
    #[error("scenario: {0}")]
    Scenario(String),

    /// Underlying I/O error while reading a scenario file.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
