//! Torque limits and the control-mode state machine.

use serde::{Deserialize, Serialize};
use squat_core::cpn::TAU_PEAK;
use squat_telemetry::ControlMode;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyLimits {
    /// Per-joint torque ceiling, N·m.
    pub tau_max: f64,
    /// Largest change per joint per tick, N·m.
    pub rate_limit: f64,
    /// Command silence tolerated in Assist, ms.
    pub watchdog_timeout_ms: u64,
}

impl Default for SafetyLimits {
    fn default() -> Self {
        Self {
            tau_max: 10.0,
            rate_limit: 2.0,
            watchdog_timeout_ms: 500,
        }
    }
}

impl SafetyLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_max > 0.0 && self.tau_max <= TAU_PEAK) {
            return Err(Error::Config(format!(
                "tau_max {} outside (0, {TAU_PEAK}]",
                self.tau_max
            )));
        }
        if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(Error::Config(format!(
                "rate_limit {} must be positive",
                self.rate_limit
            )));
        }
        if self.watchdog_timeout_ms == 0 {
            return Err(Error::Config("watchdog_timeout_ms must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarded {
    pub torque: [f64; 4],
    /// A non-finite input was replaced by zero.
    pub fault: bool,
}

/// Clamps each joint to `±tau_max`, then moves at most `rate_limit` from
/// `prev`. Non-finite entries become zero and raise a fault.
pub fn apply_safety(cmd: &[f64; 4], limits: &SafetyLimits, prev: &[f64; 4]) -> Guarded {
    let mut fault = false;
    let torque = std::array::from_fn(|j| {
        let c = if cmd[j].is_finite() {
            cmd[j]
        } else {
            fault = true;
            0.0
        };
        let c = c.clamp(-limits.tau_max, limits.tau_max);
        let p = if prev[j].is_finite() { prev[j] } else { 0.0 };
        c.clamp(p - limits.rate_limit, p + limits.rate_limit)
    });
    Guarded { torque, fault }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    CmdZero,
    CmdAssist,
    CmdEstop,
    CmdReset,
    WatchdogExpired,
    Fault,
}

impl Event {
    pub const ALL: [Event; 6] = [
        Event::CmdZero,
        Event::CmdAssist,
        Event::CmdEstop,
        Event::CmdReset,
        Event::WatchdogExpired,
        Event::Fault,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Event::CmdZero => "cmd_zero",
            Event::CmdAssist => "cmd_assist",
            Event::CmdEstop => "cmd_estop",
            Event::CmdReset => "cmd_reset",
            Event::WatchdogExpired => "watchdog_expired",
            Event::Fault => "fault",
        }
    }
}

/// Mode after `event`. E-stop is absorbing until reset; pairs not listed
/// leave the mode unchanged.
pub fn transition(mode: ControlMode, event: Event) -> ControlMode {
    use ControlMode::*;
    match (mode, event) {
        (_, Event::CmdEstop | Event::Fault) => EStop,
        (EStop, Event::CmdReset) => ZeroTorque,
        (ZeroTorque, Event::CmdAssist) => Assist,
        (Assist, Event::CmdZero | Event::WatchdogExpired) => ZeroTorque,
        (m, _) => m,
    }
}

/// Tracks the time of the last valid command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Watchdog {
    pub timeout_ms: u64,
    last_ms: u64,
}

impl Watchdog {
    pub fn new(timeout_ms: u64, now_ms: u64) -> Self {
        Self {
            timeout_ms,
            last_ms: now_ms,
        }
    }

    pub fn feed(&mut self, now_ms: u64) {
        self.last_ms = self.last_ms.max(now_ms);
    }

    pub fn expired(&self, now_ms: u64) -> bool {
        now_ms.saturating_sub(self.last_ms) > self.timeout_ms
    }
}
