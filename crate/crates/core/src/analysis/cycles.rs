use std::io::Write;

use crate::error::{invalid, Result};
use crate::num::Real;

/// Knee flexion below which the subject is standing, degrees.
pub const STANDING_DEG: f64 = 10.0;
/// Knee flexion a squat must exceed, degrees.
pub const PEAK_DEG: f64 = 30.0;
/// Moving-average width, s.
pub const SMOOTHING_S: f64 = 0.25;
/// Phase points from 0 to 100 %.
pub const RESAMPLE_POINTS: usize = 101;

/// Cycles resampled onto [`RESAMPLE_POINTS`] phase points, with the
/// pointwise mean and sample SD.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleStats<T> {
    pub cycles: Vec<Vec<T>>,
    pub mean: Vec<T>,
    pub sd: Vec<T>,
}

fn moving_average<T: Real>(x: &[T], width: usize) -> Vec<T> {
    let half = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(T::zero());
    for v in x {
        let last = *prefix.last().expect("seeded");
        prefix.push(last + *v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / T::of((hi - lo) as f64)
        })
        .collect()
}

/// Cycle boundaries in a knee flexion trace (rad) sampled at `rate_hz`.
/// After smoothing, the trace must fall below [`STANDING_DEG`] to count as
/// standing and rise above [`PEAK_DEG`] to count as a squat; each boundary
/// is the smoothed minimum of a standing interval. Consecutive boundaries
/// enclose one squat. Fewer than one full cycle gives an empty list.
pub fn segment_cycles<T: Real>(knee: &[T], rate_hz: f64) -> Vec<usize> {
    let width = ((SMOOTHING_S * rate_hz).round() as usize).max(1);
    let s = moving_average(knee, width);
    let standing = T::of(STANDING_DEG.to_radians());
    let peak = T::of(PEAK_DEG.to_radians());

    let mut boundaries = Vec::new();
    // Minimum of the standing interval in progress.
    let mut current: Option<usize> = None;
    for (i, v) in s.iter().enumerate() {
        match current {
            Some(m) => {
                if *v > peak {
                    boundaries.push(m);
                    current = None;
                } else if *v < s[m] {
                    current = Some(i);
                }
            }
            None => {
                if *v < standing {
                    current = Some(i);
                }
            }
        }
    }
    match current {
        // The final standing interval closes the last squat.
        Some(m) => boundaries.push(m),
        // The last boundary opened a squat that never finished.
        None => {
            boundaries.pop();
        }
    }
    if boundaries.len() < 2 {
        boundaries.clear();
    }
    boundaries
}

/// Linearly interpolates each cycle `boundaries[i]..=boundaries[i+1]` onto
/// [`RESAMPLE_POINTS`] equally spaced phases.
pub fn resample_cycles<T: Real>(series: &[T], boundaries: &[usize]) -> Result<CycleStats<T>> {
    if boundaries.len() < 2 {
        return Err(invalid("boundaries", "need at least one cycle"));
    }
    if boundaries.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("boundaries", "must be strictly increasing"));
    }
    if *boundaries.last().expect("non-empty") >= series.len() {
        return Err(invalid("boundaries", "past the end of the series"));
    }
    let last = T::of((RESAMPLE_POINTS - 1) as f64);
    let cycles: Vec<Vec<T>> = boundaries
        .windows(2)
        .map(|w| {
            let seg = &series[w[0]..=w[1]];
            let span = T::of((seg.len() - 1) as f64);
            (0..RESAMPLE_POINTS)
                .map(|k| {
                    let x = T::of(k as f64) / last * span;
                    let i = x.floor().to_usize().expect("finite").min(seg.len() - 2);
                    let frac = x - T::of(i as f64);
                    seg[i] + (seg[i + 1] - seg[i]) * frac
                })
                .collect()
        })
        .collect();
    CycleStats::from_cycles(cycles)
}

impl<T: Real> CycleStats<T> {
    /// Pointwise mean and sample SD of already resampled cycles.
    pub fn from_cycles(cycles: Vec<Vec<T>>) -> Result<Self> {
        if cycles.is_empty() {
            return Err(invalid("cycles", "need at least one cycle"));
        }
        if cycles.iter().any(|c| c.len() != RESAMPLE_POINTS) {
            return Err(invalid(
                "cycles",
                format!("each needs {RESAMPLE_POINTS} points"),
            ));
        }
        let n = T::of(cycles.len() as f64);
        let mean: Vec<T> = (0..RESAMPLE_POINTS)
            .map(|k| cycles.iter().map(|c| c[k]).sum::<T>() / n)
            .collect();
        let sd = (0..RESAMPLE_POINTS)
            .map(|k| {
                if cycles.len() < 2 {
                    return T::zero();
                }
                let ss: T = cycles.iter().map(|c| (c[k] - mean[k]).powi(2)).sum();
                (ss / (n - T::one())).sqrt()
            })
            .collect();
        Ok(CycleStats { cycles, mean, sd })
    }
}

/// Peak of the mean curve, degrees.
pub fn peak_flexion<T: Real>(stats: &CycleStats<T>) -> f64 {
    stats
        .mean
        .iter()
        .map(|v| v.f64().to_degrees())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `phase_pct` then mean and SD columns in degrees for each named curve.
pub fn write_curves_csv<T: Real, W: Write>(
    curves: &[(&str, &CycleStats<T>)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["phase_pct".to_string()];
    for (name, _) in curves {
        header.push(format!("{name}_mean_deg"));
        header.push(format!("{name}_sd_deg"));
    }
    w.write_record(&header)?;
    for k in 0..RESAMPLE_POINTS {
        let mut row = vec![k.to_string()];
        for (_, c) in curves {
            row.push(format!("{:.4}", c.mean[k].f64().to_degrees()));
            row.push(format!("{:.4}", c.sd[k].f64().to_degrees()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_shrinks_at_edges() {
        let s = moving_average(&[0.0, 3.0, 6.0, 9.0], 3);
        assert_eq!(s, vec![1.5, 3.0, 6.0, 7.5]);
    }
}
