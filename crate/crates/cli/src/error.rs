use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

/// Failure classes with distinct exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<squat_core::Error> for CliError {
    fn from(e: squat_core::Error) -> Self {
        use squat_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Validation { .. } | E::Config(_) | E::InfeasibleDepth { .. } => {
                CliError::Config(msg)
            }
            E::Format { .. } | E::Io(_) | E::Csv(_) => CliError::Io(msg),
            E::NonFinite(_)
            | E::SingularMassMatrix
            | E::Diverged { .. }
            | E::TrainingDiverged { .. }
            | E::OptimizationFailed(_)
            | E::EmptyWindow { .. } => CliError::Numeric(msg),
        }
    }
}

impl From<squat_runtime::Error> for CliError {
    fn from(e: squat_runtime::Error) -> Self {
        use squat_runtime::Error as E;
        match e {
            E::Core(c) => c.into(),
            E::Config(m) => CliError::Config(m),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<squat_telemetry::TelemetryError> for CliError {
    fn from(e: squat_telemetry::TelemetryError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
