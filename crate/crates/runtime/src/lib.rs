//! Deployment loop for the exoskeleton controller: angle history with
//! filtered central-difference velocities, network inference, torque
//! limits, the mode state machine with watchdog and e-stop, deadline
//! accounting and session logs.

pub mod config;
pub mod controller;
pub mod error;
pub mod history;
pub mod log;
pub mod safety;
pub mod session;
pub mod source;

pub use config::{Ports, RuntimeConfig, SourceConfig};
pub use controller::{Controller, StepOutput};
pub use error::{Error, Result};
pub use history::{Biquad, HistoryBuffer, NonMonotonic};
pub use log::{
    load_session_log, read_events, read_session_log, write_session_log, EventRecord, LogRecord,
    SessionPaths, SessionWriter,
};
pub use safety::{apply_safety, transition, Event, Guarded, SafetyLimits, Watchdog};
pub use session::{
    run_session, Scripted, SessionOptions, SessionSummary, DEADLINE_TOLERANCE_MS, TICK_MS,
};
pub use source::{Logged, ReplaySource, Sample, SampleSource, SimulatedSubject};
pub use squat_telemetry::ControlMode;

pub const PKG_VERSION: &str = env!("CARGO_PKG_VERSION");
