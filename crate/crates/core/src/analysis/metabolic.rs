use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::num::Real;

/// W per (ml/min) of oxygen uptake.
pub const VO2_COEFF: f64 = 0.278;
/// W per (ml/min) of carbon dioxide output.
pub const VCO2_COEFF: f64 = 0.075;

/// One breath-to-breath gas exchange sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetabolicRecord {
    #[serde(rename = "t_s")]
    pub t: f64,
    #[serde(rename = "VO2_ml_min")]
    pub vo2: f64,
    #[serde(rename = "VCO2_ml_min")]
    pub vco2: f64,
    #[serde(rename = "HR_bpm")]
    pub hr: Option<f64>,
}

/// Metabolic power per kilogram, W/kg, from gas rates in ml/min.
pub fn brockway_power<T: Real>(vo2: T, vco2: T, mass: T) -> Result<T> {
    if !(mass > T::zero() && mass.is_finite()) {
        return Err(invalid("mass", format!("{mass} kg must be positive")));
    }
    if !(vo2 >= T::zero() && vco2 >= T::zero() && vo2.is_finite() && vco2.is_finite()) {
        return Err(invalid("gas rates", "must be finite and non-negative"));
    }
    Ok((T::of(VO2_COEFF) * vo2 + T::of(VCO2_COEFF) * vco2) / mass)
}

fn in_window(
    trial: &[MetabolicRecord],
    window: (f64, f64),
) -> Result<impl Iterator<Item = &MetabolicRecord>> {
    let (start, end) = window;
    let (Some(first), Some(last)) = (trial.first(), trial.last()) else {
        return Err(Error::EmptyWindow { start, end });
    };
    if !(start <= end && start >= first.t && end <= last.t) {
        return Err(invalid(
            "window",
            format!(
                "[{start}, {end}] s outside trial span [{}, {}]",
                first.t, last.t
            ),
        ));
    }
    Ok(trial.iter().filter(move |r| r.t >= start && r.t <= end))
}

/// Mean breath-to-breath gross power over the closed window, W/kg.
pub fn gross_metabolic_rate(
    trial: &[MetabolicRecord],
    window: (f64, f64),
    mass: f64,
) -> Result<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for r in in_window(trial, window)? {
        sum += brockway_power(r.vo2, r.vco2, mass)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyWindow {
            start: window.0,
            end: window.1,
        });
    }
    Ok(sum / n as f64)
}

/// Gross rate over the window minus the resting rate, W/kg.
pub fn net_metabolic_rate(
    trial: &[MetabolicRecord],
    window: (f64, f64),
    resting: f64,
    mass: f64,
) -> Result<f64> {
    Ok(gross_metabolic_rate(trial, window, mass)? - resting)
}

/// Mean heart rate over the closed window, skipping rows without a reading.
pub fn mean_heart_rate(trial: &[MetabolicRecord], window: (f64, f64)) -> Result<f64> {
    let readings: Vec<f64> = in_window(trial, window)?.filter_map(|r| r.hr).collect();
    if readings.is_empty() {
        return Err(Error::EmptyWindow {
            start: window.0,
            end: window.1,
        });
    }
    Ok(readings.iter().sum::<f64>() / readings.len() as f64)
}

/// The final `seconds` of a trial.
pub fn last_window(trial: &[MetabolicRecord], seconds: f64) -> Result<(f64, f64)> {
    let (Some(first), Some(last)) = (trial.first(), trial.last()) else {
        return Err(invalid("trial", "no samples"));
    };
    Ok(((last.t - seconds).max(first.t), last.t))
}

/// Reads `t_s,VO2_ml_min,VCO2_ml_min,HR_bpm` rows; `HR_bpm` may be empty.
pub fn read_metabolic_csv<R: Read>(input: R) -> Result<Vec<MetabolicRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<MetabolicRecord> = Vec::new();
    for row in reader.deserialize() {
        let r: MetabolicRecord = row?;
        if !(r.vo2 >= 0.0 && r.vco2 >= 0.0 && r.t.is_finite()) {
            return Err(invalid(
                "metabolic row",
                format!("bad values at t = {} s", r.t),
            ));
        }
        if rows.last().is_some_and(|p| r.t < p.t) {
            return Err(invalid("t_s", format!("decreases at {} s", r.t)));
        }
        rows.push(r);
    }
    Ok(rows)
}

pub fn write_metabolic_csv<W: Write>(rows: &[MetabolicRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
