//! Reduced sagittal squat plant: anthropometry, reference trajectories and
//! rigid-body dynamics of the ankle–knee–hip chain.

pub mod body;
pub mod plant;
pub mod reference;

pub use body::{
    anthropometric_scale, anthropometric_scale_with, Anthropometry, BodyParams, JointStops, Segment,
};
pub use plant::{
    center_of_mass, forward_dynamics, from_generalized, inverse_dynamics, joint_positions,
    mechanical_energy, segment_angles, segment_coms, step, stop_torque, to_generalized, PlantState,
    Triple, ANKLE, HIP, KNEE,
};
pub use reference::{
    balance_ankle, generate_reference, scale_reference_time, ReferenceSample, SquatDepth,
    SquatReference,
};

/// Integration step, s.
pub const SIM_DT: f64 = 0.001;
/// Control period, s (100 Hz).
pub const CONTROL_DT: f64 = 0.01;
/// Dynamics substeps per control tick.
pub const SUBSTEPS: usize = 10;
/// Default squat cycle duration, s.
pub const DEFAULT_PERIOD: f64 = 4.0;
