use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid resolution must be at least 1")]
    EmptyGrid,

    #[error("mesh has no interior degrees of freedom")]
    NoInteriorDofs,

    #[error("unsupported quadrature order {0} (supported: 2, 4, 7)")]
    UnsupportedQuadrature(usize),

    #[error("invalid control box: lower bound {lo} exceeds upper bound {hi}")]
    InvalidBox { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("matrix is not symmetric (relative deviation {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("negative curvature {curvature:e} at iteration {iteration}: matrix is singular or indefinite")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("solver breakdown at iteration {iteration} (residual {residual:e})")]
    Breakdown { iteration: usize, residual: f64 },

    #[error("dense path limited to {max} unknowns, got {n}")]
    DenseSizeExceeded { n: usize, max: usize },

    #[error("reference mesh must be at least two refinements finer (h_coarse = {h_coarse}, h_reference = {h_reference})")]
    InsufficientRefinement { h_coarse: f64, h_reference: f64 },

    #[error("operation not available for this control variant: {0}")]
    UnsupportedVariant(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of a numerical method (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::Breakdown { .. }
                | Error::Indefinite { .. }
                | Error::NotPositiveDefinite
        )
    }
}
