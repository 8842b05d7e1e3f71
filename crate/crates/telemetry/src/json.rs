use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packet::{
    CommandKind, CommandPacket, ControlMode, DecodeError, StateFlags, StatePacket, TAG_LEN, VERSION,
};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error(transparent)]
    Packet(#[from] DecodeError),
    #[error("tag longer than {TAG_LEN} bytes")]
    Tag,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    #[serde(rename = "type")]
    kind: String,
    magic: String,
    version: u8,
    mode: u8,
    flags: u8,
    seq: u32,
    t_ms: u64,
    angles: [f32; 4],
    velocities: [f32; 4],
    torque_cmd: [f32; 4],
    scale: f32,
    missed_deadlines: u32,
}

#[derive(Serialize, Deserialize)]
struct CommandJson {
    #[serde(rename = "type", default = "command_type")]
    kind: String,
    #[serde(default = "command_magic")]
    magic: String,
    #[serde(default = "version")]
    version: u8,
    cmd: u8,
    #[serde(default)]
    arg: f32,
    #[serde(default)]
    tag: String,
    #[serde(default)]
    seq: u32,
}

fn command_type() -> String {
    "command".into()
}

fn command_magic() -> String {
    "EXCM".into()
}

fn version() -> u8 {
    VERSION
}

/// One-line JSON mirror of a state packet, without the trailing newline.
pub fn state_json(p: &StatePacket) -> String {
    serde_json::to_string(&StateJson {
        kind: "state".into(),
        magic: "EXST".into(),
        version: VERSION,
        mode: p.mode as u8,
        flags: p.flags.0,
        seq: p.seq,
        t_ms: p.t_ms,
        angles: p.angles,
        velocities: p.velocities,
        torque_cmd: p.torque_cmd,
        scale: p.scale,
        missed_deadlines: p.missed_deadlines,
    })
    .expect("plain struct serializes")
}

pub fn state_from_json(line: &str) -> Result<StatePacket, JsonError> {
    let j: StateJson = serde_json::from_str(line)?;
    if j.magic != "EXST" {
        return Err(DecodeError::Magic.into());
    }
    if j.version != VERSION {
        return Err(DecodeError::Version(j.version).into());
    }
    Ok(StatePacket {
        mode: ControlMode::from_u8(j.mode).ok_or(DecodeError::Mode(j.mode))?,
        flags: StateFlags(j.flags),
        seq: j.seq,
        t_ms: j.t_ms,
        angles: j.angles,
        velocities: j.velocities,
        torque_cmd: j.torque_cmd,
        scale: j.scale,
        missed_deadlines: j.missed_deadlines,
    })
}

pub fn command_json(c: &CommandPacket) -> String {
    serde_json::to_string(&CommandJson {
        kind: command_type(),
        magic: command_magic(),
        version: VERSION,
        cmd: c.cmd as u8,
        arg: c.arg,
        tag: c.tag_text(),
        seq: c.seq,
    })
    .expect("plain struct serializes")
}

/// Parses a command line; omitted fields take their zero values.
pub fn command_from_json(line: &str) -> Result<CommandPacket, JsonError> {
    let j: CommandJson = serde_json::from_str(line)?;
    if j.magic != "EXCM" {
        return Err(DecodeError::Magic.into());
    }
    if j.version != VERSION {
        return Err(DecodeError::Version(j.version).into());
    }
    if j.tag.len() > TAG_LEN {
        return Err(JsonError::Tag);
    }
    let cmd = CommandKind::from_u8(j.cmd).ok_or(DecodeError::Command(j.cmd))?;
    let mut tag = [0u8; TAG_LEN];
    tag[..j.tag.len()].copy_from_slice(j.tag.as_bytes());
    let c = CommandPacket {
        cmd,
        arg: j.arg,
        tag,
        seq: j.seq,
    };
    c.validate()?;
    Ok(c)
}
