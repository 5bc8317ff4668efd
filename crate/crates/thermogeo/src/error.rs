use thiserror::Error;

/// Failures shared by the geometric and mechanical solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("metric is not positive-definite at ({x:?}): {detail}")]
    SingularMetric { x: [f64; 3], detail: String },

    #[error("grid too small for the finite-difference stencil: {0}")]
    StencilOutOfBounds(String),

    #[error("charts do not match: {0}")]
    ChartMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frame covectors are linearly dependent at ({x:?}) (det = {det:.3e})")]
    DegenerateFrame { x: [f64; 3], det: f64 },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("temperature profile is not strictly monotone on [{lo}, {hi}]")]
    NonMonotoneTemperature { lo: f64, hi: f64 },

    #[error("cone parameter is degenerate at beta = -1 (c diverges)")]
    DegenerateCone,

    #[error("chart contains the coordinate origin, where the profile is singular")]
    OriginInDomain,

    #[error(
        "surface is not embeddable: omega'(R) = {omega_prime:.6e} at R = {r:.6e} \
         violates -2/R < omega' < 0"
    )]
    NotEmbeddable { r: f64, omega_prime: f64 },

    #[error("shooting iteration diverged after {iterations} steps (residual {residual:.3e})")]
    ShootingDivergence { iterations: usize, residual: f64 },

    #[error("radius must be positive: {0}")]
    NonPositiveRadius(f64),

    #[error("deformation gradient is singular at ({x:?})")]
    SingularF { x: [f64; 3] },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("finite-difference derivatives did not converge: {0}")]
    NonDifferentiable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
