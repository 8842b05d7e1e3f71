//! Where the loop gets joint angles: the in-process plant or a recorded log.

use squat_core::cpn::{joint_sample, PdGains, Squatter};
use squat_core::dynamics::{
    anthropometric_scale, generate_reference, SquatDepth, CONTROL_DT, DEFAULT_PERIOD,
};
use squat_telemetry::ControlMode;

use crate::error::Result;
use crate::log::LogRecord;

/// Reference samples per squat for the simulated subject.
const REFERENCE_SAMPLES: usize = 401;

/// Mode and scale recorded alongside a replayed sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logged {
    pub mode: ControlMode,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t_ms: u64,
    /// hipL, hipR, kneeL, kneeR flexion, rad
    pub angles: [f64; 4],
    pub logged: Option<Logged>,
}

pub trait SampleSource {
    /// Sample for the coming tick; `None` when exhausted.
    fn next_sample(&mut self) -> Result<Option<Sample>>;
    /// Torque commanded on the tick just sampled.
    fn apply(&mut self, torque: &[f64; 4]) -> Result<()>;
}

/// The tracking-controlled plant standing in for the wearer's IMUs.
#[derive(Debug, Clone)]
pub struct SimulatedSubject {
    sim: Squatter<f64>,
    tick: u64,
}

impl SimulatedSubject {
    pub fn new(height: f64, mass: f64, gains: PdGains<f64>) -> Result<Self> {
        let body = anthropometric_scale(height, mass)?;
        let reference = generate_reference(
            SquatDepth::default(),
            DEFAULT_PERIOD,
            REFERENCE_SAMPLES,
            &body,
        )?;
        Ok(Self {
            sim: Squatter::new(body, gains, reference)?,
            tick: 0,
        })
    }

    /// Gains that keep the default subject on the reference.
    pub fn default_gains() -> PdGains<f64> {
        PdGains {
            kp: [2000.0, 1000.0, 1000.0],
            kd: [200.0, 100.0, 100.0],
        }
    }

    pub fn squatter(&self) -> &Squatter<f64> {
        &self.sim
    }
}

impl SampleSource for SimulatedSubject {
    fn next_sample(&mut self) -> Result<Option<Sample>> {
        self.sim.state.t = self.tick as f64 * CONTROL_DT;
        Ok(Some(Sample {
            t_ms: self.tick * 10,
            angles: joint_sample(&self.sim.state).angles,
            logged: None,
        }))
    }

    fn apply(&mut self, torque: &[f64; 4]) -> Result<()> {
        let human = self.sim.human_torque()?;
        self.sim.advance(human, torque)?;
        self.tick += 1;
        Ok(())
    }
}

/// Replays the angles, mode and scale of a recorded session.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    records: Vec<LogRecord>,
    next: usize,
}

impl ReplaySource {
    pub fn new(records: Vec<LogRecord>) -> Self {
        Self { records, next: 0 }
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }
}

impl SampleSource for ReplaySource {
    fn next_sample(&mut self) -> Result<Option<Sample>> {
        let Some(r) = self.records.get(self.next) else {
            return Ok(None);
        };
        self.next += 1;
        Ok(Some(Sample {
            t_ms: r.t_ms,
            angles: r.angles,
            logged: Some(Logged {
                mode: r.mode,
                scale: r.scale,
            }),
        }))
    }

    fn apply(&mut self, _torque: &[f64; 4]) -> Result<()> {
        Ok(())
    }
}
