use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("session log line {line}: {reason}")]
    Log { line: u64, reason: String },

    #[error(transparent)]
    Core(#[from] squat_core::Error),

    #[error(transparent)]
    Telemetry(#[from] squat_telemetry::TelemetryError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("session log writer stopped: {0}")]
    Writer(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
