use serde::{Deserialize, Serialize};

use super::{static_optimization, FiberState, MuscleParams, StaticSolution};
use crate::dynamics::{
    generate_reference, inverse_dynamics, BodyParams, SquatDepth, Triple, DEFAULT_PERIOD, HIP, KNEE,
};
use crate::error::{Error, Result};
use crate::num::Real;

/// Pose at which every default fiber sits at its optimal length.
pub const LUMPED_REF_POSE: [f64; 3] = [0.3, 1.0, 0.8];

/// Ratio of summed extensor capacity to peak squat demand.
const CAPACITY_MARGIN: f64 = 3.0;

// name, relative F0, l0 (m), (ankle, knee, hip) moment arms (m)
const LUMPED: [(&str, f64, f64, [f64; 3]); 6] = [
    ("gluteals", 1.0, 0.16, [0.0, 0.0, 0.06]),
    ("iliopsoas", 0.4, 0.14, [0.0, 0.0, -0.05]),
    ("vasti", 1.6, 0.14, [0.0, -0.045, 0.0]),
    ("hamstrings", 0.6, 0.14, [0.0, 0.03, 0.055]),
    ("rectus_femoris", 0.3, 0.12, [0.0, -0.045, -0.04]),
    ("gastrocnemius", 0.3, 0.08, [0.0, 0.025, 0.0]),
];

/// Muscles with constant moment arms about a reference pose.
#[derive(Debug, Clone, PartialEq)]
pub struct MuscleSet<T> {
    pub muscles: Vec<MuscleParams<T>>,
    /// Pose (ankle, knee, hip flexion, rad) at which `l = l0`.
    pub q_ref: Triple<T>,
}

#[derive(Serialize, Deserialize)]
struct SetFile {
    q_ref: [f64; 3],
    muscle: Vec<MuscleEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MuscleEntry {
    name: String,
    f0: f64,
    l0: f64,
    v_max: f64,
    #[serde(default)]
    ankle: f64,
    #[serde(default)]
    knee: f64,
    #[serde(default)]
    hip: f64,
}

impl<T: Real> MuscleSet<T> {
    pub fn new(muscles: Vec<MuscleParams<T>>, q_ref: Triple<T>) -> Result<Self> {
        if muscles.is_empty() {
            return Err(crate::error::invalid("muscles", "empty set"));
        }
        for m in &muscles {
            m.validate()?;
        }
        Ok(Self { muscles, q_ref })
    }

    /// Default six-muscle set with forces scaled so each joint's summed
    /// extensor capacity is at least three times the peak extension torque
    /// of the default squat.
    pub fn lumped(body: &BodyParams<T>) -> Result<Self> {
        let reference =
            generate_reference(SquatDepth::default(), T::of(DEFAULT_PERIOD), 201, body)?;
        let (mut hip_peak, mut knee_peak) = (T::zero(), T::zero());
        for s in &reference.samples {
            let tau = inverse_dynamics(&s.q, &s.qdot, &s.qddot, body)?;
            hip_peak = hip_peak.max(tau[HIP]);
            knee_peak = knee_peak.max(-tau[KNEE]);
        }
        let (mut hip_cap, mut knee_cap) = (0.0, 0.0);
        for (_, f0, _, r) in LUMPED {
            hip_cap += f0 * r[HIP].max(0.0);
            knee_cap += f0 * (-r[KNEE]).max(0.0);
        }
        let scale = CAPACITY_MARGIN * (hip_peak.f64() / hip_cap).max(knee_peak.f64() / knee_cap);
        let muscles = LUMPED
            .iter()
            .map(|(name, f0, l0, r)| {
                MuscleParams::new(
                    *name,
                    T::of(f0 * scale),
                    T::of(*l0),
                    T::of(10.0 * l0),
                    r.map(T::of),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(muscles, LUMPED_REF_POSE.map(T::of))
    }

    /// Fiber lengths and velocities at a pose. A muscle with public moment
    /// arm `r` shortens by `r` per radian of the joint motion it drives.
    pub fn fiber_states(&self, q: &Triple<T>, qdot: &Triple<T>) -> Vec<FiberState<T>> {
        self.muscles
            .iter()
            .map(|m| {
                let r = flexion_arm(&m.moment_arm);
                let mut l = m.l0;
                let mut ldot = T::zero();
                for j in 0..3 {
                    l -= r[j] * (q[j] - self.q_ref[j]);
                    ldot -= r[j] * qdot[j];
                }
                // Keeps the length positive at poses far outside the squat range.
                let floor = m.l0 * T::of(0.05);
                FiberState {
                    l: l.max(floor),
                    ldot,
                }
            })
            .collect()
    }

    /// Activations reproducing the public-convention hip and knee torques
    /// in `tau` at the given pose.
    pub fn solve(
        &self,
        q: &Triple<T>,
        qdot: &Triple<T>,
        tau: &Triple<T>,
    ) -> Result<StaticSolution<T>> {
        let fibers = self.fiber_states(q, qdot);
        static_optimization(&[tau[HIP], tau[KNEE]], &self.muscles, &fibers)
    }

    pub fn to_toml(&self) -> Result<String> {
        let file = SetFile {
            q_ref: self.q_ref.map(Real::f64),
            muscle: self
                .muscles
                .iter()
                .map(|m| MuscleEntry {
                    name: m.name.clone(),
                    f0: m.f0.f64(),
                    l0: m.l0.f64(),
                    v_max: m.v_max.f64(),
                    ankle: m.moment_arm[0].f64(),
                    knee: m.moment_arm[1].f64(),
                    hip: m.moment_arm[2].f64(),
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SetFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let muscles = file
            .muscle
            .into_iter()
            .map(|e| {
                MuscleParams::new(
                    e.name,
                    T::of(e.f0),
                    T::of(e.l0),
                    T::of(e.v_max),
                    [e.ankle, e.knee, e.hip].map(T::of),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(muscles, file.q_ref.map(T::of))
    }
}

/// Moment arms in flexion coordinates.
fn flexion_arm<T: Real>(r: &Triple<T>) -> Triple<T> {
    [r[0], r[1], -r[2]]
}
