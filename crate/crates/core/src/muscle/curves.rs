//! Normalized Hill curves.

use crate::num::Real;

/// Width of the active force–length Gaussian.
pub const FL_WIDTH: f64 = 0.45;
/// Hill shape factor of the concentric branch.
pub const FV_SHAPE: f64 = 4.0;
/// Eccentric force plateau.
pub const FV_ECCENTRIC_MAX: f64 = 1.5;
/// Passive strain at which passive force reaches `F0`.
pub const PASSIVE_STRAIN: f64 = 0.6;
/// Exponential shape of the passive curve.
pub const PASSIVE_SHAPE: f64 = 4.0;

/// Active force–length, `l_norm = l / l0`.
#[inline]
pub fn f_l<T: Real>(l_norm: T) -> T {
    let d = l_norm - T::one();
    (-(d * d) / T::of(FL_WIDTH)).exp()
}

/// Force–velocity, `v_norm = ldot / v_max`, lengthening positive.
#[inline]
pub fn f_v<T: Real>(v_norm: T) -> T {
    if v_norm <= T::zero() {
        ((T::one() + v_norm) / (T::one() - T::of(FV_SHAPE) * v_norm)).max(T::zero())
    } else {
        let k = T::of(FV_ECCENTRIC_MAX - 1.0);
        T::one() + k * v_norm / (v_norm + T::of(1.0 / 3.0))
    }
}

/// Passive force–length.
#[inline]
pub fn f_p<T: Real>(l_norm: T) -> T {
    if l_norm <= T::one() {
        return T::zero();
    }
    let shape = T::of(PASSIVE_SHAPE);
    ((shape * (l_norm - T::one()) / T::of(PASSIVE_STRAIN)).exp() - T::one())
        / (shape.exp() - T::one())
}
