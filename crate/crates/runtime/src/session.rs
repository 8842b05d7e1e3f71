//! The 100 Hz loop.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use squat_core::num::cast_array;
use squat_telemetry::{
    CommandKind, CommandPacket, ControlMode, StateFlags, StatePacket, Telemetry,
};

use crate::controller::Controller;
use crate::error::{Error, Result};
use crate::history::HistoryBuffer;
use crate::log::{LogRecord, SessionPaths, SessionWriter};
use crate::safety::{transition, Event, Watchdog};
use crate::source::SampleSource;

/// Control period, ms.
pub const TICK_MS: u64 = 10;
/// Lateness beyond one period before a tick counts as a missed deadline.
pub const DEADLINE_TOLERANCE_MS: u64 = 2;

/// A command applied once the session clock reaches `t_ms`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scripted {
    pub t_ms: u64,
    pub command: CommandPacket,
}

#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub initial_mode: ControlMode,
    pub initial_scale: f64,
    /// Tick budget in ms of session time; `None` runs until the source
    /// ends or `stop` is raised.
    pub duration_ms: Option<u64>,
    /// Added to live angles (hipL, hipR, kneeL, kneeR), rad.
    pub offsets: [f64; 4],
    /// Hold ticks to the wall clock.
    pub paced: bool,
    pub script: Vec<Scripted>,
    pub stop: Option<Arc<AtomicBool>>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            initial_mode: ControlMode::ZeroTorque,
            initial_scale: 1.0,
            duration_ms: None,
            offsets: [0.0; 4],
            paced: true,
            script: Vec::new(),
            stop: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSummary {
    pub ticks: u64,
    pub missed_deadlines: u32,
    pub final_mode: ControlMode,
    pub rejected_samples: u64,
    pub faults: u64,
    pub commands: u64,
    /// Longest gap between consecutive tick starts, ms; 0 when unpaced.
    pub max_interval_ms: f64,
}

struct Loop<'a> {
    mode: ControlMode,
    scale: f64,
    watchdog: Watchdog,
    writer: &'a SessionWriter,
    commands: u64,
}

impl Loop<'_> {
    fn event(&mut self, t_ms: u64, e: Event) -> Result<()> {
        let next = transition(self.mode, e);
        self.writer.event(
            t_ms,
            e.name(),
            format!("{} -> {}", self.mode.name(), next.name()),
        )?;
        self.mode = next;
        Ok(())
    }

    fn command(&mut self, t_ms: u64, c: &CommandPacket) -> Result<()> {
        self.commands += 1;
        self.watchdog.feed(t_ms);
        match c.cmd {
            CommandKind::Heartbeat => Ok(()),
            CommandKind::SetMode => match c.mode() {
                Some(ControlMode::Assist) => self.event(t_ms, Event::CmdAssist),
                Some(ControlMode::ZeroTorque) => self.event(t_ms, Event::CmdZero),
                _ => self
                    .writer
                    .event(t_ms, "rejected", format!("set_mode {}", c.arg)),
            },
            CommandKind::SetScale => {
                if (0.0..=1.0).contains(&c.arg) {
                    self.scale = c.arg as f64;
                    self.writer.event(t_ms, "scale", self.scale.to_string())
                } else {
                    self.writer
                        .event(t_ms, "rejected", format!("set_scale {}", c.arg))
                }
            }
            CommandKind::EStop => self.event(t_ms, Event::CmdEstop),
            CommandKind::Reset => self.event(t_ms, Event::CmdReset),
            CommandKind::Tag => self.writer.event(t_ms, "tag", c.tag_text()),
        }
    }
}

/// Runs the control loop until the source ends, the duration elapses or
/// `stop` is raised. Commands from the script and from `telemetry` are
/// applied at tick boundaries; a replayed source dictates mode and scale.
pub fn run_session(
    controller: &Controller,
    source: &mut dyn SampleSource,
    telemetry: Option<&mut Telemetry>,
    opts: &SessionOptions,
    paths: &SessionPaths,
) -> Result<SessionSummary> {
    let writer = SessionWriter::create(paths)?;
    let outcome = run_loop(controller, source, telemetry, opts, &writer);
    let closed = writer.finish();
    match (outcome, closed) {
        (Ok(s), Ok(())) => Ok(s),
        // The writer's own error says more than the closed channel.
        (Err(Error::Writer(_)), Err(e)) => Err(e),
        (Err(e), _) | (Ok(_), Err(e)) => Err(e),
    }
}

fn run_loop(
    controller: &Controller,
    source: &mut dyn SampleSource,
    mut telemetry: Option<&mut Telemetry>,
    opts: &SessionOptions,
    writer: &SessionWriter,
) -> Result<SessionSummary> {
    let mut script = opts.script.clone();
    script.sort_by_key(|s| s.t_ms);
    let mut script = script.into_iter().peekable();
    let mut state = Loop {
        mode: opts.initial_mode,
        scale: opts.initial_scale,
        watchdog: Watchdog::new(controller.limits.watchdog_timeout_ms, 0),
        writer,
        commands: 0,
    };
    let mut buffer = HistoryBuffer::new();
    let mut prev = [0.0; 4];
    let mut missed = 0u32;
    let mut faults = 0u64;
    let mut ticks = 0u64;
    let mut max_interval = Duration::ZERO;
    let max_ticks = opts.duration_ms.map(|d| d / TICK_MS);
    let period = Duration::from_millis(TICK_MS);
    let tolerance = Duration::from_millis(TICK_MS + DEADLINE_TOLERANCE_MS);
    let start = Instant::now();
    let mut last_start: Option<Instant> = None;

    writer.event(0, "session_start", state.mode.name())?;
    if opts.paced {
        let detail = match realtime::promote() {
            Ok(()) => "SCHED_FIFO".to_string(),
            Err(e) => format!("default scheduling: {e}"),
        };
        writer.event(0, "scheduling", detail)?;
    }
    loop {
        if max_ticks.is_some_and(|m| ticks >= m) {
            break;
        }
        if opts
            .stop
            .as_ref()
            .is_some_and(|s| s.load(Ordering::Relaxed))
        {
            break;
        }
        let tick_start = Instant::now();
        if let Some(last) = last_start {
            let gap = tick_start - last;
            max_interval = max_interval.max(gap);
            if opts.paced && gap > tolerance {
                missed += 1;
            }
        }
        last_start = Some(tick_start);

        let Some(sample) = source.next_sample()? else {
            break;
        };
        let t = sample.t_ms;

        match sample.logged {
            Some(logged) => {
                state.mode = logged.mode;
                state.scale = logged.scale;
            }
            None => {
                while let Some(s) = script.next_if(|s| s.t_ms <= t) {
                    state.command(t, &s.command)?;
                }
                if let Some(tel) = telemetry.as_deref() {
                    let pending: Vec<_> = tel.commands().try_iter().collect();
                    for r in pending {
                        state.command(t, &r.packet)?;
                    }
                }
                if state.mode == ControlMode::Assist && state.watchdog.expired(t) {
                    state.event(t, Event::WatchdogExpired)?;
                }
            }
        }

        let angles = match sample.logged {
            Some(_) => sample.angles,
            None => std::array::from_fn(|j| sample.angles[j] + opts.offsets[j]),
        };
        if let Err(e) = buffer.ingest(angles, t) {
            writer.event(t, "rejected_sample", e.to_string())?;
        }

        let mut out = controller.control_step(&buffer, state.mode, state.scale, &prev);
        if out.fault {
            faults += 1;
            state.event(t, Event::Fault)?;
            out.torque = [0.0; 4];
        }
        source.apply(&out.torque)?;

        let record = LogRecord {
            t_ms: t,
            mode: state.mode,
            seq: ticks as u32,
            angles,
            velocities: buffer.latest_velocity(),
            torque: out.torque,
            scale: state.scale,
            missed_deadlines: missed,
        };
        writer.tick(record)?;
        if let Some(tel) = telemetry.as_deref_mut() {
            tel.publish(StatePacket {
                mode: state.mode,
                flags: StateFlags::default()
                    .with(StateFlags::NOT_READY, out.not_ready)
                    .with(StateFlags::FAULT, out.fault),
                seq: record.seq,
                t_ms: t,
                angles: cast_array(angles),
                velocities: cast_array(record.velocities.unwrap_or([0.0; 4])),
                torque_cmd: cast_array(out.torque),
                scale: state.scale as f32,
                missed_deadlines: missed,
            });
        }
        prev = out.torque;
        ticks += 1;

        if opts.paced {
            let next = start + period * (ticks as u32);
            let now = Instant::now();
            if next > now {
                std::thread::sleep(next - now);
            }
        }
    }
    if opts.paced {
        realtime::demote();
    }
    let end_t = buffer.last_time().unwrap_or(0);
    writer.event(
        end_t,
        "session_end",
        format!("{ticks} ticks, {missed} missed"),
    )?;
    Ok(SessionSummary {
        ticks,
        missed_deadlines: missed,
        final_mode: state.mode,
        rejected_samples: buffer.rejected(),
        faults,
        commands: state.commands,
        max_interval_ms: if opts.paced {
            max_interval.as_secs_f64() * 1e3
        } else {
            0.0
        },
    })
}

mod realtime {
    /// Fixed priority for the control thread.
    #[cfg(target_os = "linux")]
    const PRIORITY: i32 = 50;

    /// Moves the calling thread to FIFO real-time scheduling.
    #[cfg(target_os = "linux")]
    pub fn promote() -> std::io::Result<()> {
        let param = libc::sched_param {
            sched_priority: PRIORITY,
        };
        // SAFETY: plain syscall on the calling thread with a valid parameter.
        let rc = unsafe { libc::sched_setscheduler(0, libc::SCHED_FIFO, &param) };
        if rc == 0 {
            Ok(())
        } else {
            Err(std::io::Error::last_os_error())
        }
    }

    #[cfg(target_os = "linux")]
    pub fn demote() {
        let param = libc::sched_param { sched_priority: 0 };
        // SAFETY: as above.
        unsafe {
            libc::sched_setscheduler(0, libc::SCHED_OTHER, &param);
        }
    }

    #[cfg(not(target_os = "linux"))]
    pub fn promote() -> std::io::Result<()> {
        Err(std::io::Error::new(
            std::io::ErrorKind::Unsupported,
            "no real-time scheduling on this platform",
        ))
    }

    #[cfg(not(target_os = "linux"))]
    pub fn demote() {}
}
