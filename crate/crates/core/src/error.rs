use thiserror::Error;

/// Errors raised by the numerical layers.
///
/// Variants map onto the CLI exit codes: validation problems (2), numerical
/// failures carrying a witness (3) and undetermined classifications (4).
#[derive(Debug, Error)]
pub enum ReebError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("trajectory left the model domain at t = {t}")]
    DomainExit { t: f64 },

    #[error("newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("converged to an equilibrium (field norm {field_norm:e})")]
    Equilibrium { field_norm: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("undetermined: {0}")]
    Undetermined(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ReebError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReebError::InvalidParameter(_) | ReebError::Schema(_) | ReebError::Json(_) => 2,
            ReebError::Undetermined(_) => 4,
            ReebError::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = ReebError> = std::result::Result<T, E>;
