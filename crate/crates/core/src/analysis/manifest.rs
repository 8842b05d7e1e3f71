use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::metabolic::{gross_metabolic_rate, last_window, mean_heart_rate, read_metabolic_csv};
use super::table::SubjectRecord;
use crate::error::{invalid, Error, Result};

fn default_trial_window() -> f64 {
    120.0
}

fn default_resting_window() -> f64 {
    180.0
}

fn yes() -> bool {
    true
}

/// Subjects to summarize. Each condition gives either the already reduced
/// values or a metabolic CSV to reduce over the final trial window.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectsManifest {
    /// Averaging window at the end of each trial, s.
    #[serde(default = "default_trial_window")]
    pub trial_window_s: f64,
    /// Averaging window at the end of the resting recording, s.
    #[serde(default = "default_resting_window")]
    pub resting_window_s: f64,
    #[serde(default, rename = "subject")]
    pub subjects: Vec<SubjectEntry>,
    #[serde(default)]
    pub kinematics: Vec<KinematicsEntry>,
}

/// Runtime session logs of one condition for the cycle-normalized curves.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicsEntry {
    pub condition: String,
    pub logs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: u32,
    pub height: f64,
    pub mass: f64,
    #[serde(default = "yes")]
    pub hr_valid: bool,
    /// Gross resting rate, W/kg.
    pub resting: Option<f64>,
    /// Metabolic CSV of the resting recording.
    pub resting_file: Option<PathBuf>,
    pub zero_torque: Option<ConditionEntry>,
    pub no_exo: Option<ConditionEntry>,
    pub assistance: Option<ConditionEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionEntry {
    /// bpm
    pub hr: Option<f64>,
    /// Net rate, W/kg.
    pub nmr: Option<f64>,
    pub file: Option<PathBuf>,
}

impl SubjectsManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty() && self.kinematics.is_empty()
    }

    /// Resolves every subject, reading files relative to `base`.
    pub fn records(&self, base: &Path) -> Result<Vec<SubjectRecord>> {
        self.subjects.iter().map(|s| self.record(s, base)).collect()
    }

    fn record(&self, s: &SubjectEntry, base: &Path) -> Result<SubjectRecord> {
        let read = |p: &Path| -> Result<_> {
            let file = std::fs::File::open(base.join(p))?;
            read_metabolic_csv(file)
        };
        let resting = match (&s.resting, &s.resting_file) {
            (Some(v), _) => Some(*v),
            (None, Some(p)) => {
                let rows = read(p)?;
                Some(gross_metabolic_rate(
                    &rows,
                    last_window(&rows, self.resting_window_s)?,
                    s.mass,
                )?)
            }
            (None, None) => None,
        };
        let mut hr = [None; 3];
        let mut nmr = [None; 3];
        for (c, entry) in [&s.zero_torque, &s.no_exo, &s.assistance]
            .into_iter()
            .enumerate()
        {
            let Some(e) = entry else { continue };
            hr[c] = e.hr;
            nmr[c] = e.nmr;
            if let Some(p) = &e.file {
                let rows = read(p)?;
                let window = last_window(&rows, self.trial_window_s)?;
                if nmr[c].is_none() {
                    let rest = resting.ok_or_else(|| {
                        invalid("resting", format!("subject {} needs a resting rate", s.id))
                    })?;
                    nmr[c] = Some(gross_metabolic_rate(&rows, window, s.mass)? - rest);
                }
                if hr[c].is_none() {
                    hr[c] = mean_heart_rate(&rows, window).ok();
                }
            }
        }
        Ok(SubjectRecord {
            id: s.id,
            height: s.height,
            mass: s.mass,
            hr,
            nmr,
            hr_valid: s.hr_valid,
        })
    }
}
