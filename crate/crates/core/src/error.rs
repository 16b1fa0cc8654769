use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {coords:?} is outside the domain")]
    OutsideDomain { coords: Vec<f64> },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: value {value}, error estimate {error} after {intervals} intervals")]
    QuadratureNonConvergence { value: f64, error: f64, intervals: usize },

    #[error("integrand is not finite at {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("non-integrable singularity: {0}")]
    NonIntegrable(String),

    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),

    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),

    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("spectral parameter {lambda} is not below the spectrum (bottom {bottom})")]
    TooCloseToSpectrum { lambda: f64, bottom: f64 },

    #[error("eigensolver did not converge: residual {residual:e}")]
    EigenNonConvergence { residual: f64 },

    #[error("Krylov approximation failed: {0}")]
    KrylovBreakdown(String),

    #[error("Feynman-Kac weight overflow on path {path}: log-weight {log_weight}")]
    WeightOverflow { path: usize, log_weight: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("graph is disconnected; minimum kernel entry {min_entry}")]
    Disconnected { min_entry: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
