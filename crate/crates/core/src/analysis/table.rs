use std::io::Write;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    ZeroTorque,
    NoExo,
    Assistance,
}

impl Condition {
    pub const ALL: [Condition; 3] = [
        Condition::ZeroTorque,
        Condition::NoExo,
        Condition::Assistance,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Condition::ZeroTorque => "zero_torque",
            Condition::NoExo => "no_exo",
            Condition::Assistance => "assistance",
        }
    }
}

/// One subject's per-condition heart rate (bpm) and net metabolic rate
/// (W/kg), indexed by [`Condition::index`]. `None` marks a condition not
/// completed.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: u32,
    /// m
    pub height: f64,
    /// kg
    pub mass: f64,
    pub hr: [Option<f64>; 3],
    pub nmr: [Option<f64>; 3],
    /// False drops the subject from heart-rate statistics only.
    pub hr_valid: bool,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, sd, n })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub condition: Condition,
    /// `None` when every subject is excluded.
    pub hr: Option<Stat>,
    pub nmr: Option<Stat>,
    /// Mean of per-subject percent reductions against zero torque.
    pub hr_change: Option<f64>,
    pub nmr_change: Option<f64>,
    pub hr_excluded: Vec<u32>,
    pub nmr_excluded: Vec<u32>,
}

/// Per-subject percent reductions against zero torque.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRow {
    pub id: u32,
    pub hr_change: [Option<f64>; 3],
    pub nmr_change: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub records: Vec<SubjectRecord>,
    pub subjects: Vec<SubjectRow>,
    pub conditions: Vec<ConditionSummary>,
    pub height: Stat,
    pub mass: Stat,
}

impl Summary {
    pub fn condition(&self, c: Condition) -> &ConditionSummary {
        &self.conditions[c.index()]
    }
}

/// `100·(zero_torque − other)/zero_torque`; positive is a reduction.
pub fn percent_change(zero_torque: f64, other: f64) -> Result<f64> {
    if zero_torque == 0.0 || !zero_torque.is_finite() {
        return Err(invalid(
            "zero_torque",
            "baseline must be finite and non-zero",
        ));
    }
    Ok(100.0 * (zero_torque - other) / zero_torque)
}

pub fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Means and SDs per condition over the subjects not excluded, and the mean
/// of per-subject percent changes. A subject with invalid heart-rate
/// readings is dropped from heart-rate statistics only; a missing condition
/// drops the subject from that condition.
pub fn summarize(records: &[SubjectRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(invalid("subjects", "need at least one"));
    }
    let zt = Condition::ZeroTorque.index();
    let hr_of = |r: &SubjectRecord, c: usize| r.hr[c].filter(|_| r.hr_valid);

    let mut subjects = Vec::with_capacity(records.len());
    for r in records {
        let mut row = SubjectRow {
            id: r.id,
            hr_change: [None; 3],
            nmr_change: [None; 3],
        };
        for c in 1..3 {
            if let (Some(base), Some(x)) = (hr_of(r, zt), hr_of(r, c)) {
                row.hr_change[c] = Some(percent_change(base, x)?);
            }
            if let (Some(base), Some(x)) = (r.nmr[zt], r.nmr[c]) {
                row.nmr_change[c] = Some(percent_change(base, x)?);
            }
        }
        subjects.push(row);
    }

    let conditions = Condition::ALL
        .iter()
        .map(|&cond| {
            let c = cond.index();
            let mut hr = Vec::new();
            let mut nmr = Vec::new();
            let mut hr_excluded = Vec::new();
            let mut nmr_excluded = Vec::new();
            for r in records {
                match hr_of(r, c) {
                    Some(v) => hr.push(v),
                    None => hr_excluded.push(r.id),
                }
                match r.nmr[c] {
                    Some(v) => nmr.push(v),
                    None => nmr_excluded.push(r.id),
                }
            }
            let mean_change = |pick: fn(&SubjectRow) -> Option<f64>| -> Option<f64> {
                let v: Vec<f64> = subjects.iter().filter_map(pick).collect();
                Stat::of(&v).map(|s| s.mean)
            };
            let (hr_change, nmr_change) = match cond {
                Condition::ZeroTorque => (None, None),
                Condition::NoExo => (
                    mean_change(|s| s.hr_change[1]),
                    mean_change(|s| s.nmr_change[1]),
                ),
                Condition::Assistance => (
                    mean_change(|s| s.hr_change[2]),
                    mean_change(|s| s.nmr_change[2]),
                ),
            };
            ConditionSummary {
                condition: cond,
                hr: Stat::of(&hr),
                nmr: Stat::of(&nmr),
                hr_change,
                nmr_change,
                hr_excluded,
                nmr_excluded,
            }
        })
        .collect();

    let heights: Vec<f64> = records.iter().map(|r| r.height).collect();
    let masses: Vec<f64> = records.iter().map(|r| r.mass).collect();
    Ok(Summary {
        records: records.to_vec(),
        subjects,
        conditions,
        height: Stat::of(&heights).expect("non-empty"),
        mass: Stat::of(&masses).expect("non-empty"),
    })
}

/// Writes the table: one row per subject with bracketed percent changes,
/// then the mean (SD) row and the mean percent change row. Excluded heart
/// rates carry `*`, missing conditions `--`.
pub fn write_summary_csv<W: Write>(summary: &Summary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subject".to_string(), "height_m".into(), "mass_kg".into()];
    for quantity in ["hr", "nmr"] {
        for c in Condition::ALL {
            header.push(format!("{quantity}_{}", c.key()));
        }
    }
    w.write_record(&header)?;

    for (r, row) in summary.records.iter().zip(&summary.subjects) {
        let mut cells = vec![r.id.to_string(), r.height.to_string(), r.mass.to_string()];
        for c in 0..3 {
            cells.push(match r.hr[c] {
                None => "--".into(),
                Some(v) if !r.hr_valid => format!("{v:.1}*"),
                Some(v) => with_bracket(format!("{v:.1}"), row.hr_change[c]),
            });
        }
        for c in 0..3 {
            cells.push(match r.nmr[c] {
                None => "--".into(),
                Some(v) => with_bracket(format!("{v:.3}"), row.nmr_change[c]),
            });
        }
        w.write_record(&cells)?;
    }

    let stat = |s: Option<Stat>, d: usize| match s {
        Some(s) => format!("{:.d$} ({:.d$})", s.mean, s.sd),
        None => "--".into(),
    };
    let mut cells = vec![
        "mean_sd".to_string(),
        stat(Some(summary.height), 3),
        stat(Some(summary.mass), 2),
    ];
    cells.extend(summary.conditions.iter().map(|c| stat(c.hr, 1)));
    cells.extend(summary.conditions.iter().map(|c| stat(c.nmr, 3)));
    w.write_record(&cells)?;

    let change = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_default();
    let mut cells = vec!["mean_change".to_string(), String::new(), String::new()];
    cells.extend(summary.conditions.iter().map(|c| change(c.hr_change)));
    cells.extend(summary.conditions.iter().map(|c| change(c.nmr_change)));
    w.write_record(&cells)?;
    w.flush()?;
    Ok(())
}

fn with_bracket(value: String, change: Option<f64>) -> String {
    match change {
        Some(p) => format!("{value} [{p:.1}]"),
        None => value,
    }
}
