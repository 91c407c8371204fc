use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    /// The projected descent kept hitting the constraint sphere.
    #[error("iterate pinned to the ball boundary ‖w‖_W = {radius:.6e}")]
    BoundaryStall { radius: f64 },

    #[error("mountain-pass path collapsed into the basin of the minimum")]
    Collapse,

    #[error("ordered pair violated at node {node}: lower {lower:.6e} >= upper {upper:.6e}")]
    OrderViolation { node: usize, lower: f64, upper: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn no_convergence(what: impl Into<String>, iterations: usize) -> Self {
        Error::NonConvergence {
            what: what.into(),
            iterations,
        }
    }
}
