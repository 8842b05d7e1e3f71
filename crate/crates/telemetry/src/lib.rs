//! Operator link for the exoskeleton runtime: fixed-size little-endian UDP
//! packets for state (`EXST`) and commands (`EXCM`), their JSON mirrors, and
//! a server that streams state and forwards commands.

mod json;
mod packet;
mod serve;

pub use json::{command_from_json, command_json, state_from_json, state_json, JsonError};
pub use packet::{
    decode_command, decode_state, encode_command, encode_state, CommandKind, CommandPacket,
    ControlMode, DecodeError, StateFlags, StatePacket, COMMAND_LEN, COMMAND_MAGIC, STATE_LEN,
    STATE_MAGIC, TAG_LEN, VERSION,
};
pub use serve::{
    serve, Counters, Received, Telemetry, TelemetryConfig, TelemetryError, BRIDGE_PORT,
    COMMAND_PORT, STREAM_PORT,
};

pub const PKG_VERSION: &str = env!("CARGO_PKG_VERSION");
