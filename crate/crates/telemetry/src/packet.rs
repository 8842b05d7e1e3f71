use thiserror::Error;

pub const STATE_MAGIC: &[u8; 4] = b"EXST";
pub const COMMAND_MAGIC: &[u8; 4] = b"EXCM";
pub const VERSION: u8 = 1;
pub const STATE_LEN: usize = 76;
pub const COMMAND_LEN: usize = 30;
pub const TAG_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ControlMode {
    #[default]
    ZeroTorque = 0,
    Assist = 1,
    EStop = 2,
}

impl ControlMode {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::ZeroTorque),
            1 => Some(Self::Assist),
            2 => Some(Self::EStop),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ZeroTorque => "ZeroTorque",
            Self::Assist => "Assist",
            Self::EStop => "EStop",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::ZeroTorque, Self::Assist, Self::EStop]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

/// State flag bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StateFlags(pub u8);

impl StateFlags {
    pub const NOT_READY: StateFlags = StateFlags(1);
    pub const FAULT: StateFlags = StateFlags(2);

    pub fn not_ready(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn fault(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn with(self, other: StateFlags, on: bool) -> Self {
        if on {
            StateFlags(self.0 | other.0)
        } else {
            StateFlags(self.0 & !other.0)
        }
    }
}

/// Runtime snapshot streamed to the console.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StatePacket {
    pub mode: ControlMode,
    pub flags: StateFlags,
    pub seq: u32,
    pub t_ms: u64,
    /// hipL, hipR, kneeL, kneeR; rad
    pub angles: [f32; 4],
    /// rad/s
    pub velocities: [f32; 4],
    /// N·m
    pub torque_cmd: [f32; 4],
    pub scale: f32,
    pub missed_deadlines: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommandKind {
    Heartbeat = 0,
    SetMode = 1,
    SetScale = 2,
    EStop = 3,
    Reset = 4,
    Tag = 5,
}

impl CommandKind {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => Self::Heartbeat,
            1 => Self::SetMode,
            2 => Self::SetScale,
            3 => Self::EStop,
            4 => Self::Reset,
            5 => Self::Tag,
            _ => return None,
        })
    }
}

/// Console command. `arg` carries the mode for `SetMode` and the scale for
/// `SetScale`; `tag` is zero-padded UTF-8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandPacket {
    pub cmd: CommandKind,
    pub arg: f32,
    pub tag: [u8; TAG_LEN],
    pub seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("packet of {len} bytes, need {need}")]
    Short { len: usize, need: usize },
    #[error("bad magic")]
    Magic,
    #[error("unsupported version {0}")]
    Version(u8),
    #[error("unknown mode {0}")]
    Mode(u8),
    #[error("unknown command {0}")]
    Command(u8),
    #[error("argument {arg} invalid for {cmd:?}")]
    Arg { cmd: CommandKind, arg: String },
}

impl CommandPacket {
    fn new(cmd: CommandKind, arg: f32, seq: u32) -> Self {
        Self {
            cmd,
            arg,
            tag: [0; TAG_LEN],
            seq,
        }
    }

    pub fn heartbeat(seq: u32) -> Self {
        Self::new(CommandKind::Heartbeat, 0.0, seq)
    }

    /// Only `ZeroTorque` and `Assist` can be requested.
    pub fn set_mode(mode: ControlMode, seq: u32) -> Result<Self, DecodeError> {
        let c = Self::new(CommandKind::SetMode, mode as u8 as f32, seq);
        c.validate()?;
        Ok(c)
    }

    pub fn set_scale(scale: f32, seq: u32) -> Result<Self, DecodeError> {
        let c = Self::new(CommandKind::SetScale, scale, seq);
        c.validate()?;
        Ok(c)
    }

    pub fn estop(seq: u32) -> Self {
        Self::new(CommandKind::EStop, 0.0, seq)
    }

    pub fn reset(seq: u32) -> Self {
        Self::new(CommandKind::Reset, 0.0, seq)
    }

    /// Tag text truncated to 16 bytes on a character boundary.
    pub fn tag(text: &str, seq: u32) -> Self {
        let mut c = Self::new(CommandKind::Tag, 0.0, seq);
        let mut end = text.len().min(TAG_LEN);
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        c.tag[..end].copy_from_slice(&text.as_bytes()[..end]);
        c
    }

    pub fn tag_text(&self) -> String {
        let end = self.tag.iter().position(|b| *b == 0).unwrap_or(TAG_LEN);
        String::from_utf8_lossy(&self.tag[..end]).into_owned()
    }

    /// The requested mode of a `SetMode` command.
    pub fn mode(&self) -> Option<ControlMode> {
        match self.cmd {
            CommandKind::SetMode => ControlMode::from_u8(self.arg as u8),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let ok = match self.cmd {
            CommandKind::SetScale => (0.0..=1.0).contains(&self.arg),
            CommandKind::SetMode => self.arg == 0.0 || self.arg == 1.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(DecodeError::Arg {
                cmd: self.cmd,
                arg: self.arg.to_string(),
            })
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.at..self.at + N]
            .try_into()
            .expect("length checked");
        self.at += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }

    fn f32x4(&mut self) -> [f32; 4] {
        std::array::from_fn(|_| self.f32())
    }
}

fn header<'a>(bytes: &'a [u8], magic: &[u8; 4], need: usize) -> Result<Reader<'a>, DecodeError> {
    if bytes.len() < need {
        return Err(DecodeError::Short {
            len: bytes.len(),
            need,
        });
    }
    if &bytes[..4] != magic {
        return Err(DecodeError::Magic);
    }
    if bytes[4] != VERSION {
        return Err(DecodeError::Version(bytes[4]));
    }
    Ok(Reader { buf: bytes, at: 5 })
}

pub fn encode_state(p: &StatePacket) -> [u8; STATE_LEN] {
    let mut out = [0u8; STATE_LEN];
    let mut w = Vec::with_capacity(STATE_LEN);
    w.extend_from_slice(STATE_MAGIC);
    w.extend_from_slice(&[VERSION, p.mode as u8, p.flags.0, 0]);
    w.extend_from_slice(&p.seq.to_le_bytes());
    w.extend_from_slice(&p.t_ms.to_le_bytes());
    for v in p.angles.iter().chain(&p.velocities).chain(&p.torque_cmd) {
        w.extend_from_slice(&v.to_le_bytes());
    }
    w.extend_from_slice(&p.scale.to_le_bytes());
    w.extend_from_slice(&p.missed_deadlines.to_le_bytes());
    out.copy_from_slice(&w);
    out
}

/// Decodes the first 76 bytes; trailing bytes are ignored.
pub fn decode_state(bytes: &[u8]) -> Result<StatePacket, DecodeError> {
    let mut r = header(bytes, STATE_MAGIC, STATE_LEN)?;
    let m = r.u8();
    let mode = ControlMode::from_u8(m).ok_or(DecodeError::Mode(m))?;
    let flags = StateFlags(r.u8());
    let _pad = r.u8();
    Ok(StatePacket {
        mode,
        flags,
        seq: r.u32(),
        t_ms: r.u64(),
        angles: r.f32x4(),
        velocities: r.f32x4(),
        torque_cmd: r.f32x4(),
        scale: r.f32(),
        missed_deadlines: r.u32(),
    })
}

pub fn encode_command(c: &CommandPacket) -> Result<[u8; COMMAND_LEN], DecodeError> {
    c.validate()?;
    let mut out = [0u8; COMMAND_LEN];
    out[..4].copy_from_slice(COMMAND_MAGIC);
    out[4] = VERSION;
    out[5] = c.cmd as u8;
    out[6..10].copy_from_slice(&c.arg.to_le_bytes());
    out[10..26].copy_from_slice(&c.tag);
    out[26..30].copy_from_slice(&c.seq.to_le_bytes());
    Ok(out)
}

pub fn decode_command(bytes: &[u8]) -> Result<CommandPacket, DecodeError> {
    let mut r = header(bytes, COMMAND_MAGIC, COMMAND_LEN)?;
    let k = r.u8();
    let cmd = CommandKind::from_u8(k).ok_or(DecodeError::Command(k))?;
    let c = CommandPacket {
        cmd,
        arg: r.f32(),
        tag: r.take(),
        seq: r.u32(),
    };
    c.validate()?;
    Ok(c)
}
