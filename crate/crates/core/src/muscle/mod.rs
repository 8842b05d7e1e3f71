//! Hill-type muscle–tendon units over a lumped sagittal set, with a
//! static-optimization activation solver and an effort integral.
//!
//! Moment arms use the public torque convention (ankle dorsiflexion, knee
//! flexion, hip extension positive): a muscle pulling with tension `F`
//! contributes `r_j · F` to joint `j`.

mod curves;
mod set;
mod static_opt;

pub use curves::{
    f_l, f_p, f_v, FL_WIDTH, FV_ECCENTRIC_MAX, FV_SHAPE, PASSIVE_SHAPE, PASSIVE_STRAIN,
};
pub use set::{MuscleSet, LUMPED_REF_POSE};
pub use static_opt::{passive_torque, static_optimization, torque_matrix, StaticSolution};

use crate::dynamics::Triple;
use crate::error::{invalid, Result};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MuscleParams<T> {
    pub name: String,
    /// Maximum isometric force, N.
    pub f0: T,
    /// Optimal fiber length, m.
    pub l0: T,
    /// Maximum shortening speed, m/s.
    pub v_max: T,
    /// Signed moment arm per joint (ankle, knee, hip), m.
    pub moment_arm: Triple<T>,
}

impl<T: Real> MuscleParams<T> {
    pub fn new(
        name: impl Into<String>,
        f0: T,
        l0: T,
        v_max: T,
        moment_arm: Triple<T>,
    ) -> Result<Self> {
        let p = Self {
            name: name.into(),
            f0,
            l0,
            v_max,
            moment_arm,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.f0) {
            return Err(invalid("f0", format!("{}: {} N", self.name, self.f0)));
        }
        if !pos(self.l0) {
            return Err(invalid("l0", format!("{}: {} m", self.name, self.l0)));
        }
        if !pos(self.v_max) {
            return Err(invalid(
                "v_max",
                format!("{}: {} m/s", self.name, self.v_max),
            ));
        }
        if !self.moment_arm.iter().all(|r| r.is_finite())
            || self.moment_arm.iter().all(|r| *r == T::zero())
        {
            return Err(invalid(
                "moment_arm",
                format!("{}: needs a nonzero arm", self.name),
            ));
        }
        Ok(())
    }
}

/// Fiber kinematics of one muscle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberState<T> {
    /// m
    pub l: T,
    /// m/s, lengthening positive
    pub ldot: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuscleState<T> {
    pub l: T,
    pub ldot: T,
    /// Activation in `[0, 1]`.
    pub a: T,
}

impl<T: Real> MuscleState<T> {
    pub fn from_fiber(f: FiberState<T>, a: T) -> Self {
        Self {
            l: f.l,
            ldot: f.ldot,
            a,
        }
    }
}

/// `F0 [a f_L f_V + f_P]` on normalized length and velocity.
pub fn muscle_force<T: Real>(p: &MuscleParams<T>, s: &MuscleState<T>) -> T {
    let l = s.l / p.l0;
    let v = s.ldot / p.v_max;
    p.f0 * (s.a * f_l(l) * f_v(v) + f_p(l))
}

/// Trapezoidal integral of `Σ a_i²` over uniformly sampled activations.
pub fn effort_metric<T: Real, A: AsRef<[T]>>(activations: &[A], dt: T) -> T {
    let sq = |a: &A| a.as_ref().iter().map(|x| *x * *x).sum::<T>();
    let n = activations.len();
    if n < 2 {
        return T::zero();
    }
    let inner: T = activations[1..n - 1].iter().map(sq).sum();
    dt * (inner + T::of(0.5) * (sq(&activations[0]) + sq(&activations[n - 1])))
}
