//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid of size {got} cannot represent bandwidth {need} (need at least {need} points)")]
    GridTooSmall { got: usize, need: usize },

    #[error("degenerate coefficient: {what} at theta = {theta:.6}")]
    DegenerateCoefficient { what: String, theta: f64 },

    #[error("singular jacobian at grid point {index}")]
    SingularJacobian { index: usize },

    #[error("matrix is singular or nearly singular: {0}")]
    NearSingular(String),

    #[error("ill-conditioned operator: condition number {cond:.3e} exceeds {limit:.3e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("eigenvalue within {tol:.3e} of the imaginary axis; sign-based calculus undefined: {detail}")]
    SpectralGap { tol: f64, detail: String },

    #[error("schur iteration failed to converge")]
    SchurFailed,

    #[error("eigendecomposition residual {resid:.3e} too large")]
    EigenResidual { resid: f64 },

    #[error("iteration failed to converge: {0}")]
    NonConvergence(String),

    #[error("quadrature did not stabilise: {0}")]
    QuadratureDrift(String),

    #[error("datum not in the admissible data space: {0}")]
    BadDatum(String),

    #[error("boundary map is rank deficient or ill-posed: {0}")]
    IllPosed(String),

    #[error("indefinite discrete operator in finite-difference solve")]
    IndefiniteOperator,

    #[error("serialization: {0}")]
    Serial(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
