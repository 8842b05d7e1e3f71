//! Minimum `Σ a²` activation sharing for a required (hip, knee) torque pair.

use super::{f_l, f_p, f_v, FiberState, MuscleParams};
use crate::dynamics::{HIP, KNEE};
use crate::error::{invalid, Result};
use crate::num::Real;

const JOINTS: [usize; 2] = [HIP, KNEE];
const MAX_NEWTON: usize = 100;
const MAX_SWEEPS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution<T> {
    pub activations: Vec<T>,
    /// Required minus achieved torque (hip, knee), N·m.
    pub residual: [T; 2],
    /// False when the demand lies outside the muscles' capacity.
    pub feasible: bool,
    /// Largest KKT violation; stationarity and bounds hold by construction,
    /// so this is the torque equality error.
    pub kkt_residual: T,
}

/// Torque per unit activation, rows (hip, knee).
pub fn torque_matrix<T: Real>(
    muscles: &[MuscleParams<T>],
    fibers: &[FiberState<T>],
) -> [Vec<T>; 2] {
    std::array::from_fn(|row| {
        muscles
            .iter()
            .zip(fibers)
            .map(|(m, f)| {
                let gain = m.f0 * f_l(f.l / m.l0) * f_v(f.ldot / m.v_max);
                m.moment_arm[JOINTS[row]] * gain
            })
            .collect()
    })
}

/// Torque from passive fiber tension, (hip, knee).
pub fn passive_torque<T: Real>(muscles: &[MuscleParams<T>], fibers: &[FiberState<T>]) -> [T; 2] {
    std::array::from_fn(|row| {
        muscles
            .iter()
            .zip(fibers)
            .map(|(m, f)| m.moment_arm[JOINTS[row]] * m.f0 * f_p(f.l / m.l0))
            .sum()
    })
}

/// Solves `min Σ a_i²` subject to the (hip, knee) torque equality and
/// `0 ≤ a ≤ 1`. Infeasible demands return the bounded least-squares
/// activations with `feasible = false`.
pub fn static_optimization<T: Real>(
    tau_required: &[T; 2],
    muscles: &[MuscleParams<T>],
    fibers: &[FiberState<T>],
) -> Result<StaticSolution<T>> {
    if muscles.is_empty() {
        return Err(invalid("muscles", "empty set"));
    }
    if muscles.len() != fibers.len() {
        return Err(invalid(
            "fibers",
            format!("{} states for {} muscles", fibers.len(), muscles.len()),
        ));
    }
    if !tau_required.iter().all(|t| t.is_finite()) {
        return Err(invalid("tau_required", "non-finite"));
    }
    for f in fibers {
        if !(f.l > T::zero() && f.l.is_finite() && f.ldot.is_finite()) {
            return Err(invalid("fibers", format!("bad fiber state {f:?}")));
        }
    }
    for (row, &joint) in JOINTS.iter().enumerate() {
        let t = tau_required[row];
        if t != T::zero() && !muscles.iter().any(|m| m.moment_arm[joint] * t > T::zero()) {
            return Err(invalid(
                "muscles",
                format!("no muscle acts in the required direction at joint {joint}"),
            ));
        }
    }

    let b = torque_matrix(muscles, fibers);
    let passive = passive_torque(muscles, fibers);
    let c = [tau_required[0] - passive[0], tau_required[1] - passive[1]];
    let cols: Vec<[T; 2]> = (0..muscles.len()).map(|i| [b[0][i], b[1][i]]).collect();

    let scale = cols
        .iter()
        .map(|g| g[0].abs() + g[1].abs())
        .fold(c[0].abs() + c[1].abs(), |acc, v| acc + v)
        .max(T::one());
    let eq_tol = T::of(1e-12) * scale;

    let (activations, feasible) = if in_zonotope(&cols, c, T::of(1e-10) * scale) {
        let a = dual_newton(&cols, c, eq_tol);
        let ok = max_abs(residual(&cols, &a, c)) <= T::of(1e-6);
        (a, ok)
    } else {
        (bounded_least_squares(&cols, c), false)
    };
    let r = residual(&cols, &activations, c);
    Ok(StaticSolution {
        activations,
        residual: r,
        feasible,
        kkt_residual: max_abs(r),
    })
}

fn max_abs<T: Real>(r: [T; 2]) -> T {
    r[0].abs().max(r[1].abs())
}

fn residual<T: Real>(cols: &[[T; 2]], a: &[T], c: [T; 2]) -> [T; 2] {
    let mut r = c;
    for (g, ai) in cols.iter().zip(a) {
        r[0] -= g[0] * *ai;
        r[1] -= g[1] * *ai;
    }
    r
}

/// Membership of `c` in `{B a : a ∈ [0,1]^n}` via support functions along
/// every edge normal; generators along one line also need their own direction.
fn in_zonotope<T: Real>(cols: &[[T; 2]], c: [T; 2], tol: T) -> bool {
    let support = |d: [T; 2]| -> T {
        cols.iter()
            .map(|g| (d[0] * g[0] + d[1] * g[1]).max(T::zero()))
            .sum()
    };
    let mut dirs: Vec<[T; 2]> = Vec::with_capacity(4 * cols.len() + 4);
    for g in cols {
        let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if n > T::zero() {
            let u = [g[0] / n, g[1] / n];
            dirs.extend([[-u[1], u[0]], [u[1], -u[0]], u, [-u[0], -u[1]]]);
        }
    }
    // Axis directions catch the all-zero set.
    dirs.extend([
        [T::one(), T::zero()],
        [-T::one(), T::zero()],
        [T::zero(), T::one()],
        [T::zero(), -T::one()],
    ]);
    dirs.iter()
        .all(|d| d[0] * c[0] + d[1] * c[1] <= support(*d) + tol)
}

/// Dual of the box-constrained minimum-norm problem: with `z_i = b_i·λ / 2`,
/// `a_i = clamp(z_i, 0, 1)` is optimal for fixed `λ`; Newton on the concave
/// dual with the free set as generalized Hessian (a primal–dual active-set
/// iteration).
fn dual_newton<T: Real>(cols: &[[T; 2]], c: [T; 2], eq_tol: T) -> Vec<T> {
    let half = T::of(0.5);
    let z_of = |lam: [T; 2]| -> Vec<T> {
        cols.iter()
            .map(|g| half * (g[0] * lam[0] + g[1] * lam[1]))
            .collect()
    };
    let clamp = |z: T| z.max(T::zero()).min(T::one());
    let dual = |lam: [T; 2]| -> T {
        let mut v = lam[0] * c[0] + lam[1] * c[1];
        for z in z_of(lam) {
            v += if z <= T::zero() {
                T::zero()
            } else if z < T::one() {
                -z * z
            } else {
                T::one() - T::of(2.0) * z
            };
        }
        v
    };
    let gram_scale = cols
        .iter()
        .map(|g| g[0] * g[0] + g[1] * g[1])
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let ridge = T::of(1e-13) * gram_scale;

    let mut lam = [T::zero(); 2];
    let mut first = true;
    for _ in 0..MAX_NEWTON {
        let z = z_of(lam);
        let a: Vec<T> = z.iter().map(|v| clamp(*v)).collect();
        let g = residual(cols, &a, c);
        if max_abs(g) <= eq_tol {
            return a;
        }
        let mut h = [[ridge, T::zero()], [T::zero(), ridge]];
        for (col, zi) in cols.iter().zip(&z) {
            // All muscles start free so the first step is the unconstrained minimum-norm solution.
            if first || (*zi > T::zero() && *zi < T::one()) {
                h[0][0] += half * col[0] * col[0];
                h[0][1] += half * col[0] * col[1];
                h[1][1] += half * col[1] * col[1];
            }
        }
        first = false;
        h[1][0] = h[0][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let d = [
            (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            (h[0][0] * g[1] - h[1][0] * g[0]) / det,
        ];
        let slope = g[0] * d[0] + g[1] * d[1];
        let base = dual(lam);
        let mut t = T::one();
        let mut next = [lam[0] + d[0], lam[1] + d[1]];
        for _ in 0..60 {
            next = [lam[0] + t * d[0], lam[1] + t * d[1]];
            if dual(next) >= base + T::of(1e-4) * t * slope {
                break;
            }
            t *= half;
        }
        lam = next;
    }
    z_of(lam).into_iter().map(clamp).collect()
}

/// `min ‖B a − c‖²` over the unit box by cyclic coordinate descent.
fn bounded_least_squares<T: Real>(cols: &[[T; 2]], c: [T; 2]) -> Vec<T> {
    let mut a = vec![T::zero(); cols.len()];
    let mut r = c;
    for _ in 0..MAX_SWEEPS {
        let mut moved = T::zero();
        for (i, g) in cols.iter().enumerate() {
            let nn = g[0] * g[0] + g[1] * g[1];
            if nn == T::zero() {
                continue;
            }
            let step = (g[0] * r[0] + g[1] * r[1]) / nn;
            let new = (a[i] + step).max(T::zero()).min(T::one());
            let delta = new - a[i];
            if delta != T::zero() {
                r[0] -= g[0] * delta;
                r[1] -= g[1] * delta;
                a[i] = new;
                moved = moved.max(delta.abs());
            }
        }
        if moved <= T::of(1e-15) {
            break;
        }
    }
    a
}
