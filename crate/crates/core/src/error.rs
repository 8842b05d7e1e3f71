use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("squat depth infeasible: no balanced ankle angle for knee {knee_peak} rad, hip {hip_peak} rad")]
    InfeasibleDepth { knee_peak: f64, hip_peak: f64 },

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("mass matrix is not positive definite")]
    SingularMassMatrix,

    #[error("integration diverged at t = {t} s (q = {q:?}, qdot = {qdot:?})")]
    Diverged { t: f64, q: [f64; 3], qdot: [f64; 3] },

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("gain optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("parameter file: bad {field}: {reason}")]
    Format { field: &'static str, reason: String },

    #[error("window [{start}, {end}] s contains no samples")]
    EmptyWindow { start: f64, end: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field,
        reason: reason.into(),
    }
}
