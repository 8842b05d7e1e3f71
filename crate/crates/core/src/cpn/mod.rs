//! Surrogate of the human controller: computed-torque tracking of the squat
//! reference with PD feedback, the motion-matching reward, closed-loop
//! rollouts with idealized exoskeleton assistance, and a gain search.

mod search;

use std::fmt;

use crate::dynamics::{
    from_generalized, inverse_dynamics, step, BodyParams, PlantState, ReferenceSample,
    SquatReference, Triple, CONTROL_DT, HIP, KNEE, SIM_DT, SUBSTEPS,
};
use crate::ecn::{build_state, JointSample, MlpParams, HISTORY};
use crate::error::{invalid, Error, Result};
use crate::muscle::{effort_metric, MuscleSet};
use crate::num::Real;

pub use search::{optimize_gains, GainSearch, SearchConfig, TIME_SCALES};

/// Hardware peak torque per joint, N·m.
pub const TAU_PEAK: f64 = 25.0;
/// Reward sharpness, 1/rad².
pub const REWARD_SHARPNESS: f64 = 5.0;

/// Feedback gains in flexion coordinates (ankle, knee, hip).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains<T> {
    /// N·m/rad
    pub kp: Triple<T>,
    /// N·m·s/rad
    pub kd: Triple<T>,
}

impl<T: Real> PdGains<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: &T| v.is_finite() && *v >= T::zero();
        if !self.kp.iter().all(ok) || !self.kd.iter().all(ok) {
            return Err(invalid("gains", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// One 100 Hz control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord<T> {
    pub t: T,
    /// Reference phase in `[0, 1)`.
    pub phase: T,
    pub q: Triple<T>,
    pub qdot: Triple<T>,
    /// Lumped human torque, public convention, N·m.
    pub human: Triple<T>,
    /// Per-leg assistance (hipL, hipR, kneeL, kneeR), public convention, N·m.
    pub exo: [T; 4],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutLog<T> {
    pub records: Vec<TickRecord<T>>,
}

impl<T: Real> RolloutLog<T> {
    /// RMS of the human hip and knee torques over all ticks.
    pub fn human_rms(&self) -> T {
        if self.records.is_empty() {
            return T::zero();
        }
        let sum: T = self
            .records
            .iter()
            .map(|r| r.human[HIP] * r.human[HIP] + r.human[KNEE] * r.human[KNEE])
            .sum();
        (sum / T::of(2.0 * self.records.len() as f64)).sqrt()
    }

    /// Muscle effort of producing the logged human hip and knee torques.
    pub fn muscle_effort(&self, muscles: &MuscleSet<T>) -> Result<T> {
        let activations = self
            .records
            .iter()
            .map(|r| {
                muscles
                    .solve(&r.q, &r.qdot, &r.human)
                    .map(|s| s.activations)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(effort_metric(&activations, T::of(CONTROL_DT)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutConfig {
    pub cycles: usize,
    /// Assistance ceiling per joint, N·m.
    pub tau_max: f64,
    pub assist_scale: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            cycles: 1,
            tau_max: 10.0,
            assist_scale: 1.0,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cycles == 0 {
            return Err(invalid("cycles", "must be at least 1"));
        }
        if !(self.tau_max >= 0.0 && self.tau_max <= TAU_PEAK) {
            return Err(invalid(
                "tau_max",
                format!("{} outside [0, {TAU_PEAK}]", self.tau_max),
            ));
        }
        if !(0.0..=1.0).contains(&self.assist_scale) {
            return Err(invalid(
                "assist_scale",
                format!("{} outside [0, 1]", self.assist_scale),
            ));
        }
        Ok(())
    }
}

/// A rollout that stopped early, with the ticks completed so far.
#[derive(Debug)]
pub struct RolloutError<T> {
    pub source: Error,
    pub partial: RolloutLog<T>,
}

impl<T> fmt::Display for RolloutError<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rollout stopped after {} ticks: {}",
            self.partial.records.len(),
            self.source
        )
    }
}

impl<T: fmt::Debug> std::error::Error for RolloutError<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl<T> From<RolloutError<T>> for Error {
    fn from(e: RolloutError<T>) -> Self {
        e.source
    }
}

/// Inverse-dynamics feedforward of the reference plus PD feedback on the
/// flexion-coordinate tracking error; public convention.
pub fn compute_human_torque<T: Real>(
    state: &PlantState<T>,
    sample: &ReferenceSample<T>,
    gains: &PdGains<T>,
    body: &BodyParams<T>,
) -> Result<Triple<T>> {
    let ff = inverse_dynamics(&sample.q, &sample.qdot, &sample.qddot, body)?;
    let fb = from_generalized(std::array::from_fn(|j| {
        gains.kp[j] * (sample.q[j] - state.q[j]) + gains.kd[j] * (sample.qdot[j] - state.qdot[j])
    }));
    Ok(std::array::from_fn(|j| ff[j] + fb[j]))
}

/// Mean over ticks of `exp(-5 ‖q - q_ref‖²)`.
pub fn motion_match_reward<T: Real>(
    log: &RolloutLog<T>,
    reference: &SquatReference<T>,
) -> Result<f64> {
    if log.records.is_empty() {
        return Err(invalid("rollout", "empty log"));
    }
    let total: f64 = log
        .records
        .iter()
        .map(|r| {
            let s = reference.sample_at(r.phase);
            let e2: f64 = (0..3).map(|j| (r.q[j] - s.q[j]).f64().powi(2)).sum();
            (-REWARD_SHARPNESS * e2).exp()
        })
        .sum();
    Ok(total / log.records.len() as f64)
}

/// Ticks needed for `cycles` repetitions of `reference`.
pub fn rollout_ticks<T: Real>(reference: &SquatReference<T>, cycles: usize) -> usize {
    (cycles as f64 * reference.period.f64() / CONTROL_DT).round() as usize
}

/// Hip and knee flexion of the plant as the network sees them; both legs
/// share the lumped kinematics.
pub fn joint_sample<T: Real>(state: &PlantState<T>) -> JointSample<T> {
    JointSample {
        angles: [state.q[HIP], state.q[HIP], state.q[KNEE], state.q[KNEE]],
        velocities: [
            state.qdot[HIP],
            state.qdot[HIP],
            state.qdot[KNEE],
            state.qdot[KNEE],
        ],
    }
}

/// Plant driven by the tracking controller, advanced one 100 Hz tick at a
/// time under externally supplied assistance.
#[derive(Debug, Clone)]
pub struct Squatter<T> {
    pub body: BodyParams<T>,
    pub gains: PdGains<T>,
    pub reference: SquatReference<T>,
    pub state: PlantState<T>,
}

impl<T: Real> Squatter<T> {
    /// Starts at rest on the reference start pose.
    pub fn new(
        body: BodyParams<T>,
        gains: PdGains<T>,
        reference: SquatReference<T>,
    ) -> Result<Self> {
        gains.validate()?;
        let start = reference.sample_at(T::zero());
        Ok(Self {
            state: PlantState::new(start.q, start.qdot),
            body,
            gains,
            reference,
        })
    }

    /// Human torque against the reference at the current time.
    pub fn human_torque(&self) -> Result<Triple<T>> {
        let s = self.reference.sample_at_time(self.state.t);
        let h = compute_human_torque(&self.state, &s, &self.gains, &self.body)?;
        if !h.iter().all(|v| v.is_finite()) {
            return Err(diverged(&self.state));
        }
        Ok(h)
    }

    /// Ten 1 ms substeps with `exo` (hipL, hipR, kneeL, kneeR) held and the
    /// human torque recomputed after the first, which uses `human`.
    pub fn advance(&mut self, human: Triple<T>, exo: &[T; 4]) -> Result<()> {
        let mut assist = [T::zero(); 3];
        assist[HIP] = exo[0] + exo[1];
        assist[KNEE] = exo[2] + exo[3];
        let dt = T::of(SIM_DT);
        for sub in 0..SUBSTEPS {
            let tau = if sub == 0 {
                human
            } else {
                let s = self.reference.sample_at_time(self.state.t);
                compute_human_torque(&self.state, &s, &self.gains, &self.body)?
            };
            let total: Triple<T> = std::array::from_fn(|j| tau[j] + assist[j]);
            if !total.iter().all(|v| v.is_finite()) {
                return Err(diverged(&self.state));
            }
            self.state = match step(&self.state, &total, &self.body, dt) {
                Ok(s) => s,
                Err(e @ Error::Diverged { .. }) => return Err(e),
                // Runaway poses break the mass matrix before going non-finite.
                Err(_) => return Err(diverged(&self.state)),
            };
        }
        Ok(())
    }
}

/// Closed-loop squat from the reference start pose. Each 100 Hz tick the
/// network (if any) sets the assistance, held over ten 1 ms substeps during
/// which the human torque tracks the reference.
pub fn rollout<T: Real>(
    body: &BodyParams<T>,
    gains: &PdGains<T>,
    reference: &SquatReference<T>,
    ecn: Option<&MlpParams<T>>,
    cfg: &RolloutConfig,
) -> Result<RolloutLog<T>, RolloutError<T>> {
    let mut log = RolloutLog::default();
    let fail = |source: Error, log: RolloutLog<T>| RolloutError {
        source,
        partial: log,
    };
    if let Err(e) = cfg.validate() {
        return Err(fail(e, log));
    }
    let mut sim = match Squatter::new(*body, *gains, reference.clone()) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, log)),
    };
    let n_ticks = rollout_ticks(reference, cfg.cycles);
    let mut history: Vec<JointSample<T>> = Vec::with_capacity(HISTORY + 1);
    let gain = T::of(cfg.assist_scale) * T::of(cfg.tau_max);
    log.records.reserve(n_ticks);

    for k in 0..n_ticks {
        let t = T::of(k as f64 * CONTROL_DT);
        sim.state.t = t;
        if history.len() == HISTORY {
            history.remove(0);
        }
        history.push(joint_sample(&sim.state));
        let mut exo = [T::zero(); 4];
        if let Some(psi) = ecn {
            let x = build_state(&history).expect("history is non-empty");
            let y = match psi.forward(&x) {
                Ok(y) => y,
                Err(e) => return Err(fail(e, log)),
            };
            for j in 0..4 {
                exo[j] = gain * y[j];
            }
        }
        let human = match sim.human_torque() {
            Ok(h) => h,
            Err(e) => return Err(fail(e, log)),
        };
        log.records.push(TickRecord {
            t,
            phase: reference.sample_at_time(t).phase,
            q: sim.state.q,
            qdot: sim.state.qdot,
            human,
            exo,
        });
        if let Err(e) = sim.advance(human, &exo) {
            return Err(fail(e, log));
        }
    }
    Ok(log)
}

fn diverged<T: Real>(state: &PlantState<T>) -> Error {
    Error::Diverged {
        t: state.t.f64(),
        q: state.q.map(Real::f64),
        qdot: state.qdot.map(Real::f64),
    }
}
