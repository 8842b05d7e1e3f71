use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{build_state, JointSample, TrainingSample};
use crate::cpn::{joint_sample, rollout, PdGains, RolloutConfig, TIME_SCALES};
use crate::dynamics::{
    inverse_dynamics, scale_reference_time, BodyParams, PlantState, SquatReference, HIP, KNEE,
};
use crate::error::{invalid, Result};
use crate::num::Real;

/// Torque normalization of the network targets, N·m.
pub const TORQUE_NORM: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub scales: Vec<f64>,
    /// Squat cycles per scale.
    pub cycles: usize,
    /// Standard deviation of the angle noise, rad.
    pub angle_noise: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            scales: TIME_SCALES.to_vec(),
            cycles: 10,
            angle_noise: 0.01,
            seed: 42,
        }
    }
}

/// Unassisted rollouts of `base` at each time scale. Every 100 Hz tick gives
/// one sample: the network state from the plant history with independent
/// angle noise on each leg channel, and as target the per-leg share of the
/// reference inverse-dynamics hip and knee torques over [`TORQUE_NORM`],
/// clipped to `[-1, 1]`.
pub fn generate_dataset<T: Real>(
    base: &SquatReference<T>,
    gains: &PdGains<T>,
    body: &BodyParams<T>,
    cfg: &DatasetConfig,
) -> Result<Vec<TrainingSample<T>>> {
    if cfg.scales.is_empty() {
        return Err(invalid("scales", "empty"));
    }
    if !(cfg.angle_noise >= 0.0 && cfg.angle_noise.is_finite()) {
        return Err(invalid("angle_noise", "must be finite and non-negative"));
    }
    let noise =
        Normal::new(0.0, cfg.angle_noise).map_err(|e| invalid("angle_noise", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rollout_cfg = RolloutConfig {
        cycles: cfg.cycles,
        tau_max: 0.0,
        assist_scale: 0.0,
    };
    let norm = T::of(2.0 * TORQUE_NORM);
    let clip = |v: T| v.max(-T::one()).min(T::one());

    let mut out = Vec::new();
    for &scale in &cfg.scales {
        let reference = scale_reference_time(base, T::of(scale))?;
        let log = rollout(body, gains, &reference, None, &rollout_cfg)?;
        let mut history: Vec<JointSample<T>> = Vec::with_capacity(log.records.len());
        for rec in &log.records {
            let mut s = joint_sample(&PlantState {
                q: rec.q,
                qdot: rec.qdot,
                t: rec.t,
            });
            for a in &mut s.angles {
                *a += T::of(noise.sample(&mut rng));
            }
            history.push(s);
            let s_e = build_state(&history).expect("history is non-empty");
            let r = reference.sample_at(rec.phase);
            let tau = inverse_dynamics(&r.q, &r.qdot, &r.qddot, body)?;
            let hip = clip(tau[HIP] / norm);
            let knee = clip(tau[KNEE] / norm);
            out.push(TrainingSample {
                s_e,
                tau_d: [hip, hip, knee, knee],
            });
        }
    }
    Ok(out)
}
