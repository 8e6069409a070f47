use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular or nearly singular (eigenvalue ratio {ratio:e})")]
    Singular { ratio: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("p = {0} exceeds the supported maximum of {max}", max = crate::model::MAX_DIM)]
    TooManyCoordinates(usize),

    #[error("operation not defined for the {0} regime")]
    WrongRegime(&'static str),

    #[error("invalid tuning: {0}")]
    InvalidTuning(String),

    #[error("solver did not converge after {iterations} sweeps (max KKT violation {violation:e})")]
    NonConvergence { iterations: usize, violation: f64 },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rejection sampling found no point of the shape in {0} draws")]
    EmptyShape(usize),

    #[error("calibration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation-type errors map to CLI exit code 2; solver failures to 3.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
