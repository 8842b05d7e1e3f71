//! Simulation, learning and analysis core for a hip–knee squat-assistance
//! exoskeleton.
//!
//! - [`dynamics`]: three-link sagittal plant and squat references
//! - [`muscle`]: Hill-type muscles and static-optimization effort
//! - [`ecn`]: the assistance network, its loss, training and file format
//! - [`cpn`]: tracking-controller surrogate of the human, gain search, rollouts
//! - [`analysis`]: metabolic power, table summaries and cycle-normalized kinematics
//!
//! Numerical code is generic over [`Real`] (`f32`/`f64`); the aliases below
//! fix the precisions used by the tools.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cpn;
pub mod dynamics;
pub mod ecn;
pub mod error;
pub mod muscle;
pub mod num;

pub use error::{Error, Result};
pub use num::Real;

pub type Body = dynamics::BodyParams<f64>;
pub type State = dynamics::PlantState<f64>;
pub type Reference = dynamics::SquatReference<f64>;

pub const PKG_VERSION: &str = env!("CARGO_PKG_VERSION");
