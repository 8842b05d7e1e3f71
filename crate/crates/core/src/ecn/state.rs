use crate::num::Real;

/// Joints in network order.
pub const JOINT_NAMES: [&str; 4] = ["hipL", "hipR", "kneeL", "kneeR"];
/// Samples of history fed to the network.
pub const HISTORY: usize = 10;
/// Angles and velocities of four joints per sample.
pub const SAMPLE_DIM: usize = 8;
pub const STATE_DIM: usize = HISTORY * SAMPLE_DIM;
/// Angle normalization, rad.
pub const ANGLE_SCALE: f64 = std::f64::consts::PI;
/// Velocity normalization, rad/s.
pub const VELOCITY_SCALE: f64 = 10.0;

/// One 100 Hz sample, joints ordered as [`JOINT_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointSample<T> {
    /// rad, flexion positive
    pub angles: [T; 4],
    /// rad/s
    pub velocities: [T; 4],
}

/// Flattens the newest [`HISTORY`] samples, oldest first, each as four
/// normalized angles then four normalized velocities clipped to `[-1, 1]`.
/// Shorter histories are padded with the oldest sample; an empty history
/// is not ready.
pub fn build_state<T: Real>(history: &[JointSample<T>]) -> Option<Vec<T>> {
    let oldest = history.first()?;
    let start = history.len().saturating_sub(HISTORY);
    let pad = HISTORY.saturating_sub(history.len());
    let angle_scale = T::of(ANGLE_SCALE);
    let vel_scale = T::of(VELOCITY_SCALE);
    let clip = |v: T| v.max(-T::one()).min(T::one());
    let mut out = Vec::with_capacity(STATE_DIM);
    for s in std::iter::repeat_n(oldest, pad).chain(&history[start..]) {
        out.extend(s.angles.iter().map(|a| clip(*a / angle_scale)));
        out.extend(s.velocities.iter().map(|v| clip(*v / vel_scale)));
    }
    Some(out)
}
