//! Cyclic squat reference trajectories.

use std::io::{Read, Write};

use crate::dynamics::body::BodyParams;
use crate::dynamics::plant::{center_of_mass, Triple, ANKLE, HIP, KNEE};
use crate::error::{invalid, Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquatDepth<T> {
    /// rad
    pub knee_peak: T,
    /// rad
    pub hip_peak: T,
}

impl<T: Real> SquatDepth<T> {
    pub fn from_degrees(knee: f64, hip: f64) -> Self {
        Self {
            knee_peak: T::of(knee.to_radians()),
            hip_peak: T::of(hip.to_radians()),
        }
    }
}

impl<T: Real> Default for SquatDepth<T> {
    /// Unassisted depth: 120° knee, 95° hip.
    fn default() -> Self {
        Self::from_degrees(120.0, 95.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample<T> {
    pub phase: T,
    pub q: Triple<T>,
    pub qdot: Triple<T>,
    pub qddot: Triple<T>,
}

/// One squat cycle sampled over phase `[0, 1]`, standing at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SquatReference<T> {
    pub period: T,
    pub depth: SquatDepth<T>,
    pub samples: Vec<ReferenceSample<T>>,
    pub time_scale: T,
}

pub const MIN_SAMPLES: usize = 50;
pub const MAX_KNEE_PEAK: f64 = 2.3;
pub const TIME_SCALE_RANGE: (f64, f64) = (0.5, 2.0);

/// Cosine descent/ascent for knee and hip with the ankle angle solved so the
/// chain's centre of mass stays above the ankle.
pub fn generate_reference<T: Real>(
    depth: SquatDepth<T>,
    period: T,
    n_samples: usize,
    body: &BodyParams<T>,
) -> Result<SquatReference<T>> {
    let kp = depth.knee_peak;
    if !(kp >= T::zero() && kp <= T::of(MAX_KNEE_PEAK)) {
        return Err(invalid(
            "knee_peak",
            format!("{kp} rad outside [0, {MAX_KNEE_PEAK}]"),
        ));
    }
    let hp = depth.hip_peak;
    if !(hp >= T::zero() && hp <= body.stops.upper[HIP]) {
        return Err(invalid("hip_peak", format!("{hp} rad outside hip range")));
    }
    if !(period > T::of(0.5)) {
        return Err(invalid("period", format!("{period} s must exceed 0.5 s")));
    }
    if n_samples < MIN_SAMPLES {
        return Err(invalid("n_samples", format!("{n_samples} < {MIN_SAMPLES}")));
    }

    let last = n_samples - 1;
    let half = T::of(0.5);
    let two_pi = T::TAU();
    let mut q_cols: [Vec<T>; 3] = Default::default();
    for i in 0..last {
        let phase = T::of(i as f64) / T::of(last as f64);
        let shape = (T::one() - (two_pi * phase).cos()) * half;
        let knee = kp * shape;
        let hip = hp * shape;
        let ankle = balance_ankle(knee, hip, body).ok_or(Error::InfeasibleDepth {
            knee_peak: kp.f64(),
            hip_peak: hp.f64(),
        })?;
        q_cols[ANKLE].push(ankle);
        q_cols[KNEE].push(knee);
        q_cols[HIP].push(hip);
    }

    let h = T::one() / T::of(last as f64);
    let derivs: [(Vec<T>, Vec<T>); 3] =
        std::array::from_fn(|j| periodic_spline_derivatives(&q_cols[j], h));
    let inv_p = T::one() / period;
    let inv_p2 = inv_p * inv_p;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..=last {
        // The final sample closes the cycle with the first.
        let k = i % last;
        let phase = if i == last {
            T::one()
        } else {
            T::of(i as f64) / T::of(last as f64)
        };
        samples.push(ReferenceSample {
            phase,
            q: std::array::from_fn(|j| q_cols[j][k]),
            qdot: std::array::from_fn(|j| derivs[j].0[k] * inv_p),
            qddot: std::array::from_fn(|j| derivs[j].1[k] * inv_p2),
        });
    }
    Ok(SquatReference {
        period,
        depth,
        samples,
        time_scale: T::one(),
    })
}

/// Ankle angle placing the centre of mass over the ankle, by bisection over
/// the ankle's joint range. `None` if the root is not bracketed.
pub fn balance_ankle<T: Real>(knee: T, hip: T, body: &BodyParams<T>) -> Option<T> {
    let com_x = |a: T| center_of_mass(&[a, knee, hip], body).0;
    let mut lo = body.stops.lower[ANKLE];
    let mut hi = body.stops.upper[ANKLE];
    if lo <= T::zero() && hi >= T::zero() && com_x(T::zero()) == T::zero() {
        return Some(T::zero());
    }
    let mut f_lo = com_x(lo);
    let f_hi = com_x(hi);
    if f_lo == T::zero() {
        return Some(lo);
    }
    if f_hi == T::zero() {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    // Bisect to machine resolution; well inside the 1e-6 rad requirement.
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = com_x(mid);
        if f_mid == T::zero() {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) * T::of(0.5))
}

/// First and second derivatives at the knots of the periodic cubic spline
/// through `y` (one period, uniform spacing `h`, last knot implied equal to
/// the first).
fn periodic_spline_derivatives<T: Real>(y: &[T], h: T) -> (Vec<T>, Vec<T>) {
    let n = y.len();
    let six_h2 = T::of(6.0) / (h * h);
    let rhs: Vec<T> = (0..n)
        .map(|i| (y[(i + 1) % n] - T::of(2.0) * y[i] + y[(i + n - 1) % n]) * six_h2)
        .collect();
    let m = solve_cyclic_tridiagonal(T::one(), T::of(4.0), T::one(), &rhs);
    let sixth = T::one() / T::of(6.0);
    let d1 = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            (y[j] - y[i]) / h - h * (T::of(2.0) * m[i] + m[j]) * sixth
        })
        .collect();
    (d1, m)
}

/// Solves the constant-coefficient cyclic tridiagonal system
/// `sub·x[i-1] + diag·x[i] + sup·x[i+1] = r[i]` (indices mod n) by
/// Sherman–Morrison on top of the Thomas algorithm.
fn solve_cyclic_tridiagonal<T: Real>(sub: T, diag: T, sup: T, r: &[T]) -> Vec<T> {
    let n = r.len();
    assert!(n >= 3, "cyclic system needs at least three unknowns");
    let alpha = sub; // row n-1, column 0
    let beta = sup; // row 0, column n-1
    let gamma = -diag;
    let mut bb = vec![diag; n];
    bb[0] = diag - gamma;
    bb[n - 1] = diag - alpha * beta / gamma;

    let thomas = |rhs: &[T]| -> Vec<T> {
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        c[0] = sup / bb[0];
        d[0] = rhs[0] / bb[0];
        for i in 1..n {
            let denom = bb[i] - sub * c[i - 1];
            c[i] = sup / denom;
            d[i] = (rhs[i] - sub * d[i - 1]) / denom;
        }
        let mut x = vec![T::zero(); n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };

    let mut x = thomas(r);
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(&u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (T::one() + z[0] + beta * z[n - 1] / gamma);
    for (xi, zi) in x.iter_mut().zip(&z) {
        *xi -= fact * *zi;
    }
    x
}

/// Replays the reference at `scale` times the speed: the period shrinks by
/// `scale`, velocities grow by `scale` and accelerations by `scale²`.
pub fn scale_reference_time<T: Real>(
    reference: &SquatReference<T>,
    scale: T,
) -> Result<SquatReference<T>> {
    if !(scale >= T::of(TIME_SCALE_RANGE.0) && scale <= T::of(TIME_SCALE_RANGE.1)) {
        return Err(invalid(
            "scale",
            format!(
                "{scale} outside [{}, {}]",
                TIME_SCALE_RANGE.0, TIME_SCALE_RANGE.1
            ),
        ));
    }
    let s2 = scale * scale;
    let samples = reference
        .samples
        .iter()
        .map(|s| ReferenceSample {
            phase: s.phase,
            q: s.q,
            qdot: s.qdot.map(|v| v * scale),
            qddot: s.qddot.map(|a| a * s2),
        })
        .collect();
    Ok(SquatReference {
        period: reference.period / scale,
        depth: reference.depth,
        samples,
        time_scale: reference.time_scale * scale,
    })
}

impl<T: Real> SquatReference<T> {
    /// Builds a reference from explicit samples, checking the cyclic invariants.
    pub fn from_samples(period: T, samples: Vec<ReferenceSample<T>>) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(invalid("period", "must be positive"));
        }
        if samples.len() < 2 {
            return Err(invalid("samples", "need at least two"));
        }
        if samples[0].phase != T::zero() || samples[samples.len() - 1].phase != T::one() {
            return Err(invalid("phase", "must run from 0 to 1"));
        }
        if samples.windows(2).any(|w| !(w[1].phase > w[0].phase)) {
            return Err(invalid("phase", "must be strictly increasing"));
        }
        let (first, last) = (&samples[0], &samples[samples.len() - 1]);
        if first.q != last.q || first.qdot != last.qdot {
            return Err(invalid("samples", "first and last samples must coincide"));
        }
        let peak = |j: usize| {
            samples
                .iter()
                .map(|s| s.q[j])
                .fold(T::neg_infinity(), T::max)
        };
        let depth = SquatDepth {
            knee_peak: peak(KNEE),
            hip_peak: peak(HIP),
        };
        Ok(Self {
            period,
            depth,
            samples,
            time_scale: T::one(),
        })
    }

    /// Interpolated sample at `phase` (wrapped into `[0, 1)`), by quintic
    /// Hermite interpolation of the stored positions, velocities and
    /// accelerations.
    pub fn sample_at(&self, phase: T) -> ReferenceSample<T> {
        let mut p = phase - phase.floor();
        if p >= T::one() {
            p = T::zero();
        }
        let n = self.samples.len();
        // Locate the bracketing interval.
        let idx = match self
            .samples
            .binary_search_by(|s| s.phase.partial_cmp(&p).expect("finite phase"))
        {
            Ok(i) => return with_phase(self.samples[i], p),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let a = &self.samples[idx];
        let b = &self.samples[idx + 1];
        let span = (b.phase - a.phase) * self.period;
        let s = (p - a.phase) / (b.phase - a.phase);
        let (h, dh, ddh) = quintic_basis(s);
        let mut out = ReferenceSample {
            phase: p,
            q: [T::zero(); 3],
            qdot: [T::zero(); 3],
            qddot: [T::zero(); 3],
        };
        for j in 0..3 {
            let coeffs = [
                a.q[j],
                a.qdot[j] * span,
                a.qddot[j] * span * span,
                b.qddot[j] * span * span,
                b.qdot[j] * span,
                b.q[j],
            ];
            let mut v = [T::zero(); 3];
            for k in 0..6 {
                v[0] += h[k] * coeffs[k];
                v[1] += dh[k] * coeffs[k];
                v[2] += ddh[k] * coeffs[k];
            }
            out.q[j] = v[0];
            out.qdot[j] = v[1] / span;
            out.qddot[j] = v[2] / (span * span);
        }
        out
    }

    /// Sample at time `t` seconds into the (repeating) cycle.
    pub fn sample_at_time(&self, t: T) -> ReferenceSample<T> {
        self.sample_at(t / self.period)
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "phase",
            "q_ankle",
            "q_knee",
            "q_hip",
            "qdot_ankle",
            "qdot_knee",
            "qdot_hip",
            "qddot_ankle",
            "qddot_knee",
            "qddot_hip",
        ])?;
        for s in &self.samples {
            let mut row = vec![s.phase.f64().to_string()];
            for v in s.q.iter().chain(&s.qdot).chain(&s.qddot) {
                row.push(v.f64().to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_csv<R: Read>(input: R, period: T) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut samples = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != 10 {
                return Err(invalid(
                    "csv",
                    format!("row {} has {} columns", line + 2, rec.len()),
                ));
            }
            let v: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| invalid("csv", format!("row {}: {e}", line + 2)))?;
            let t = |k: usize| T::of(v[k]);
            samples.push(ReferenceSample {
                phase: t(0),
                q: [t(1), t(2), t(3)],
                qdot: [t(4), t(5), t(6)],
                qddot: [t(7), t(8), t(9)],
            });
        }
        Self::from_samples(period, samples)
    }
}

fn with_phase<T: Real>(mut s: ReferenceSample<T>, phase: T) -> ReferenceSample<T> {
    s.phase = phase;
    s
}

/// Quintic Hermite basis in the order (y0, y0', y0'', y1'', y1', y1) with
/// first and second derivatives.
fn quintic_basis<T: Real>(s: T) -> ([T; 6], [T; 6], [T; 6]) {
    let c = |x: f64| T::of(x);
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h = [
        T::one() - c(10.0) * s3 + c(15.0) * s4 - c(6.0) * s5,
        s - c(6.0) * s3 + c(8.0) * s4 - c(3.0) * s5,
        c(0.5) * s2 - c(1.5) * s3 + c(1.5) * s4 - c(0.5) * s5,
        c(0.5) * s3 - s4 + c(0.5) * s5,
        c(-4.0) * s3 + c(7.0) * s4 - c(3.0) * s5,
        c(10.0) * s3 - c(15.0) * s4 + c(6.0) * s5,
    ];
    let dh = [
        c(-30.0) * s2 + c(60.0) * s3 - c(30.0) * s4,
        T::one() - c(18.0) * s2 + c(32.0) * s3 - c(15.0) * s4,
        s - c(4.5) * s2 + c(6.0) * s3 - c(2.5) * s4,
        c(1.5) * s2 - c(4.0) * s3 + c(2.5) * s4,
        c(-12.0) * s2 + c(28.0) * s3 - c(15.0) * s4,
        c(30.0) * s2 - c(60.0) * s3 + c(30.0) * s4,
    ];
    let ddh = [
        c(-60.0) * s + c(180.0) * s2 - c(120.0) * s3,
        c(-36.0) * s + c(96.0) * s2 - c(60.0) * s3,
        T::one() - c(9.0) * s + c(18.0) * s2 - c(10.0) * s3,
        c(3.0) * s - c(12.0) * s2 + c(10.0) * s3,
        c(-24.0) * s + c(84.0) * s2 - c(60.0) * s3,
        c(60.0) * s - c(180.0) * s2 + c(120.0) * s3,
    ];
    (h, dh, ddh)
}
