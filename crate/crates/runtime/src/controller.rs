use squat_core::ecn::{build_state, JointSample, MlpParams, STATE_DIM};
use squat_core::num::cast_array;
use squat_telemetry::ControlMode;

use crate::error::{Error, Result};
use crate::history::HistoryBuffer;
use crate::safety::{apply_safety, SafetyLimits};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Commanded torque (hipL, hipR, kneeL, kneeR), N·m.
    pub torque: [f64; 4],
    pub not_ready: bool,
    pub fault: bool,
}

/// Single-precision network inference behind the safety guard.
#[derive(Debug, Clone)]
pub struct Controller {
    psi: MlpParams<f32>,
    pub limits: SafetyLimits,
}

impl Controller {
    pub fn new(psi: MlpParams<f32>, limits: SafetyLimits) -> Result<Self> {
        limits.validate()?;
        psi.validate()?;
        if psi.input_dim() != STATE_DIM || psi.output_dim() != 4 {
            return Err(Error::Config(format!(
                "network maps {} -> {}, need {STATE_DIM} -> 4",
                psi.input_dim(),
                psi.output_dim()
            )));
        }
        Ok(Self { psi, limits })
    }

    pub fn psi(&self) -> &MlpParams<f32> {
        &self.psi
    }

    /// `scale · tau_max · ψ(state)` before the safety guard; `None` until the
    /// buffer is ready.
    pub fn assist_command(&self, buffer: &HistoryBuffer, scale: f64) -> Option<[f64; 4]> {
        let history: Vec<JointSample<f32>> = buffer
            .samples()?
            .iter()
            .map(|s| JointSample {
                angles: cast_array(s.angles),
                velocities: cast_array(s.velocities),
            })
            .collect();
        let x = build_state(&history)?;
        let gain = scale_of(scale) * self.limits.tau_max;
        let y = match self.psi.forward(&x) {
            Ok(y) => y,
            Err(_) => return Some([f64::NAN; 4]),
        };
        Some(std::array::from_fn(|j| gain * y[j] as f64))
    }

    /// One 100 Hz tick. Zero-torque and e-stop command zeros at once; assist
    /// commands pass through the safety guard relative to `prev`.
    pub fn control_step(
        &self,
        buffer: &HistoryBuffer,
        mode: ControlMode,
        scale: f64,
        prev: &[f64; 4],
    ) -> StepOutput {
        let idle = StepOutput {
            torque: [0.0; 4],
            not_ready: !buffer.is_ready(),
            fault: false,
        };
        if mode != ControlMode::Assist {
            return idle;
        }
        match self.assist_command(buffer, scale) {
            None => idle,
            Some(cmd) => {
                let g = apply_safety(&cmd, &self.limits, prev);
                StepOutput {
                    torque: g.torque,
                    not_ready: false,
                    fault: g.fault,
                }
            }
        }
    }
}

fn scale_of(s: f64) -> f64 {
    if s.is_finite() {
        s.clamp(0.0, 1.0)
    } else {
        0.0
    }
}
