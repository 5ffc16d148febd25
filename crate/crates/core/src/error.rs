use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver failed to bracket or converge.
    #[error("divergence: {0}")]
    Divergence(String),

    /// A point on the zero section was handed to a fibration operation.
    #[error("point {0:?} lies on the zero section w = 0, off the fibration")]
    OffFibration([f64; 4]),

    /// The operation does not support the requested variant.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A linear solve hit a singular matrix.
    #[error("singular system at {point:?}: {what}")]
    Singular { point: [f64; 4], what: String },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// A trajectory left the upper half-space before the requested end time.
    #[error("trajectory left y > 0 at t ≈ {exit_time}")]
    DomainExit { exit_time: f64 },

    /// A black-box map did not match the canonical isometry form.
    #[error("map is not an isometry of canonical form: residual {residual:e}")]
    NotCanonicalIsometry { residual: f64 },

    /// A user-supplied profile table could not be parsed.
    #[error("profile table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;
