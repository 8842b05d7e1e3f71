//! Equations of motion of the pinned ankle–knee–hip chain.
//!
//! Generalized coordinates are flexion angles `q = (ankle dorsiflexion, knee
//! flexion, hip flexion)`. Segment orientations from vertical follow as
//! `shank = q_a`, `thigh = q_a - q_k`, `hat = q_a - q_k + q_h`, positive
//! leaning forward (+x).
//!
//! Torques crossing the public API use the plotting convention of the
//! device: ankle dorsiflexion positive, knee flexion positive, hip
//! *extension* positive. Internally everything is in generalized
//! (flexion-positive) coordinates and [`to_generalized`] flips the hip.

use crate::dynamics::body::BodyParams;
use crate::error::{invalid, Error, Result};
use crate::num::{all_finite, Real};

pub const ANKLE: usize = 0;
pub const KNEE: usize = 1;
pub const HIP: usize = 2;

/// (ankle, knee, hip)
pub type Triple<T> = [T; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T> {
    pub q: Triple<T>,
    pub qdot: Triple<T>,
    pub t: T,
}

impl<T: Real> PlantState<T> {
    pub fn new(q: Triple<T>, qdot: Triple<T>) -> Self {
        Self {
            q,
            qdot,
            t: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.q) && all_finite(&self.qdot) && self.t.is_finite()
    }
}

/// Converts a public-convention torque triple to generalized forces. The map
/// is its own inverse.
#[inline]
pub fn to_generalized<T: Real>(tau: Triple<T>) -> Triple<T> {
    [tau[ANKLE], tau[KNEE], -tau[HIP]]
}

#[inline]
pub fn from_generalized<T: Real>(tau: Triple<T>) -> Triple<T> {
    to_generalized(tau)
}

/// Segment orientations from vertical.
#[inline]
pub fn segment_angles<T: Real>(q: &Triple<T>) -> Triple<T> {
    let thigh = q[ANKLE] - q[KNEE];
    [q[ANKLE], thigh, thigh + q[HIP]]
}

/// Knee, hip and head-of-chain positions with the ankle at the origin.
pub fn joint_positions<T: Real>(q: &Triple<T>, body: &BodyParams<T>) -> [(T, T); 3] {
    let th = segment_angles(q);
    let segs = body.segments();
    let mut p = (T::zero(), T::zero());
    let mut out = [p; 3];
    for i in 0..3 {
        p = (
            p.0 + segs[i].length * th[i].sin(),
            p.1 + segs[i].length * th[i].cos(),
        );
        out[i] = p;
    }
    out
}

/// Centre of mass position of each segment.
pub fn segment_coms<T: Real>(q: &Triple<T>, body: &BodyParams<T>) -> [(T, T); 3] {
    let th = segment_angles(q);
    let segs = body.segments();
    let mut base = (T::zero(), T::zero());
    let mut out = [base; 3];
    for i in 0..3 {
        out[i] = (
            base.0 + segs[i].com * th[i].sin(),
            base.1 + segs[i].com * th[i].cos(),
        );
        base = (
            base.0 + segs[i].length * th[i].sin(),
            base.1 + segs[i].length * th[i].cos(),
        );
    }
    out
}

/// Whole-body (chain) centre of mass.
pub fn center_of_mass<T: Real>(q: &Triple<T>, body: &BodyParams<T>) -> (T, T) {
    let coms = segment_coms(q, body);
    let segs = body.segments();
    let mut mx = T::zero();
    let mut my = T::zero();
    for (c, s) in coms.iter().zip(segs.iter()) {
        mx += s.mass * c.0;
        my += s.mass * c.1;
    }
    let m = body.segment_mass();
    (mx / m, my / m)
}

/// Mass matrix and velocity/gravity bias in generalized coordinates.
struct ChainTerms<T> {
    mass: [[T; 3]; 3],
    bias: Triple<T>,
}

// theta = A q with A = [[1,0,0],[1,-1,0],[1,-1,1]]; columns of A^T D A are
// assembled directly from the absolute-angle terms.
const A: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [1.0, -1.0, 0.0], [1.0, -1.0, 1.0]];

fn chain_terms<T: Real>(q: &Triple<T>, qdot: &Triple<T>, body: &BodyParams<T>) -> ChainTerms<T> {
    let segs = body.segments();
    let th = segment_angles(q);
    let a = A.map(|row| row.map(T::of));
    let mut thd = [T::zero(); 3];
    for i in 0..3 {
        for j in 0..3 {
            thd[i] += a[i][j] * qdot[j];
        }
    }

    // Mass carried above each segment, and first moments h_i.
    let mut above = [T::zero(); 3];
    for i in (0..2).rev() {
        above[i] = above[i + 1] + segs[i + 1].mass;
    }
    let h: [T; 3] = std::array::from_fn(|i| segs[i].mass * segs[i].com + above[i] * segs[i].length);

    let mut d = [[T::zero(); 3]; 3];
    let mut k = [[T::zero(); 3]; 3];
    for i in 0..3 {
        d[i][i] = segs[i].inertia
            + segs[i].mass * segs[i].com * segs[i].com
            + above[i] * segs[i].length * segs[i].length;
        for j in (i + 1)..3 {
            k[i][j] = segs[i].length * h[j];
            k[j][i] = k[i][j];
            d[i][j] = k[i][j] * (th[i] - th[j]).cos();
            d[j][i] = d[i][j];
        }
    }

    let mut abs_bias = [T::zero(); 3];
    for i in 0..3 {
        let mut s = T::zero();
        for j in 0..3 {
            if i != j {
                s += k[i][j] * (th[i] - th[j]).sin() * thd[j] * thd[j];
            }
        }
        abs_bias[i] = s - body.gravity * h[i] * th[i].sin();
    }

    let mut mass = [[T::zero(); 3]; 3];
    let mut bias = [T::zero(); 3];
    for r in 0..3 {
        for c in 0..3 {
            let mut acc = T::zero();
            for i in 0..3 {
                for j in 0..3 {
                    acc += a[i][r] * d[i][j] * a[j][c];
                }
            }
            mass[r][c] = acc;
        }
        for i in 0..3 {
            bias[r] += a[i][r] * abs_bias[i];
        }
    }
    ChainTerms { mass, bias }
}

/// Generalized torque applied by the soft joint stops.
pub fn stop_torque<T: Real>(q: &Triple<T>, qdot: &Triple<T>, body: &BodyParams<T>) -> Triple<T> {
    let s = &body.stops;
    std::array::from_fn(|j| {
        if q[j] < s.lower[j] {
            s.stiffness * (s.lower[j] - q[j]) - s.damping * qdot[j]
        } else if q[j] > s.upper[j] {
            s.stiffness * (s.upper[j] - q[j]) - s.damping * qdot[j]
        } else {
            T::zero()
        }
    })
}

/// Potential energy stored in compressed stops.
fn stop_energy<T: Real>(q: &Triple<T>, body: &BodyParams<T>) -> T {
    let s = &body.stops;
    let half = T::of(0.5);
    (0..3)
        .map(|j| {
            let v = if q[j] < s.lower[j] {
                s.lower[j] - q[j]
            } else if q[j] > s.upper[j] {
                q[j] - s.upper[j]
            } else {
                T::zero()
            };
            half * s.stiffness * v * v
        })
        .sum()
}

/// Joint torques (public convention) producing `qddot` from `(q, qdot)`.
pub fn inverse_dynamics<T: Real>(
    q: &Triple<T>,
    qdot: &Triple<T>,
    qddot: &Triple<T>,
    body: &BodyParams<T>,
) -> Result<Triple<T>> {
    if !(all_finite(q) && all_finite(qdot) && all_finite(qddot)) {
        return Err(Error::NonFinite("inverse dynamics input"));
    }
    let terms = chain_terms(q, qdot, body);
    let stops = stop_torque(q, qdot, body);
    let gen: Triple<T> = std::array::from_fn(|r| {
        let mut acc = terms.bias[r] - stops[r];
        for c in 0..3 {
            acc += terms.mass[r][c] * qddot[c];
        }
        acc
    });
    Ok(from_generalized(gen))
}

/// Accelerations under public-convention joint torques `tau`.
pub fn forward_dynamics<T: Real>(
    state: &PlantState<T>,
    tau: &Triple<T>,
    body: &BodyParams<T>,
) -> Result<Triple<T>> {
    if !state.is_finite() || !all_finite(tau) {
        return Err(Error::NonFinite("forward dynamics input"));
    }
    let terms = chain_terms(&state.q, &state.qdot, body);
    let stops = stop_torque(&state.q, &state.qdot, body);
    let gen = to_generalized(*tau);
    let rhs: Triple<T> = std::array::from_fn(|r| gen[r] + stops[r] - terms.bias[r]);
    solve_spd3(&terms.mass, &rhs)
}

/// Cholesky solve of a 3×3 symmetric positive definite system.
fn solve_spd3<T: Real>(m: &[[T; 3]; 3], b: &Triple<T>) -> Result<Triple<T>> {
    let mut l = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return Err(Error::SingularMassMatrix);
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [T::zero(); 3];
    for i in 0..3 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [T::zero(); 3];
    for i in (0..3).rev() {
        let mut s = y[i];
        for k in (i + 1)..3 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Ok(x)
}

pub const MAX_STEP: f64 = 0.005;

/// Classical fourth-order Runge–Kutta step with `tau` held over the step.
pub fn step<T: Real>(
    state: &PlantState<T>,
    tau: &Triple<T>,
    body: &BodyParams<T>,
    dt: T,
) -> Result<PlantState<T>> {
    if !(dt > T::zero() && dt <= T::of(MAX_STEP)) {
        return Err(invalid("dt", format!("{dt} s outside (0, {MAX_STEP}]")));
    }
    let half = dt * T::of(0.5);
    let shifted = |k_q: &Triple<T>, k_v: &Triple<T>, h: T| PlantState {
        q: std::array::from_fn(|j| state.q[j] + k_q[j] * h),
        qdot: std::array::from_fn(|j| state.qdot[j] + k_v[j] * h),
        t: state.t + h,
    };
    let diverged = |s: &PlantState<T>| Error::Diverged {
        t: s.t.f64(),
        q: s.q.map(Real::f64),
        qdot: s.qdot.map(Real::f64),
    };
    let accel = |s: &PlantState<T>| {
        if s.is_finite() {
            forward_dynamics(s, tau, body)
        } else {
            Err(diverged(s))
        }
    };
    let v1 = state.qdot;
    let a1 = forward_dynamics(state, tau, body)?;
    let s2 = shifted(&v1, &a1, half);
    let a2 = accel(&s2)?;
    let s3 = shifted(&s2.qdot, &a2, half);
    let a3 = accel(&s3)?;
    let s4 = shifted(&s3.qdot, &a3, dt);
    let a4 = accel(&s4)?;
    let sixth = dt / T::of(6.0);
    let two = T::of(2.0);
    let next = PlantState {
        q: std::array::from_fn(|j| {
            state.q[j] + sixth * (v1[j] + two * s2.qdot[j] + two * s3.qdot[j] + s4.qdot[j])
        }),
        qdot: std::array::from_fn(|j| {
            state.qdot[j] + sixth * (a1[j] + two * a2[j] + two * a3[j] + a4[j])
        }),
        t: state.t + dt,
    };
    if !next.is_finite() {
        return Err(diverged(&next));
    }
    Ok(next)
}

/// Kinetic plus gravitational plus stop-spring energy, with potential
/// measured from ankle height.
pub fn mechanical_energy<T: Real>(state: &PlantState<T>, body: &BodyParams<T>) -> T {
    let terms = chain_terms(&state.q, &state.qdot, body);
    let mut kinetic = T::zero();
    for r in 0..3 {
        for c in 0..3 {
            kinetic += state.qdot[r] * terms.mass[r][c] * state.qdot[c];
        }
    }
    kinetic *= T::of(0.5);
    let potential: T = segment_coms(&state.q, body)
        .iter()
        .zip(body.segments())
        .map(|(c, s)| s.mass * body.gravity * c.1)
        .sum();
    kinetic + potential + stop_energy(&state.q, body)
}
