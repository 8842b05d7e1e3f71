//! Run configuration: a TOML file, then `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use squat_core::cpn::{PdGains, SearchConfig, TIME_SCALES};
use squat_core::ecn::{DatasetConfig, TrainConfig};
use squat_runtime::{RuntimeConfig, SimulatedSubject};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectConfig {
    /// m
    pub height: f64,
    /// kg
    pub mass: f64,
}

impl Default for SubjectConfig {
    fn default() -> Self {
        Self {
            height: 1.73,
            mass: 86.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsConfig {
    /// Tracking gains, or the starting point of the search.
    pub kp: [f64; 3],
    pub kd: [f64; 3],
    pub search: bool,
    pub budget: usize,
    pub lambda: usize,
    pub sigma: f64,
    pub cycles: usize,
    pub kp_max: f64,
    pub kd_max: f64,
}

impl Default for GainsConfig {
    fn default() -> Self {
        let g = SimulatedSubject::default_gains();
        let s = SearchConfig::default();
        Self {
            kp: g.kp,
            kd: g.kd,
            search: true,
            budget: s.budget,
            lambda: s.lambda,
            sigma: s.sigma,
            cycles: s.cycles,
            kp_max: s.kp_max,
            kd_max: s.kd_max,
        }
    }
}

impl GainsConfig {
    pub fn gains(&self) -> PdGains<f64> {
        PdGains {
            kp: self.kp,
            kd: self.kd,
        }
    }

    pub fn search_config(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            budget: self.budget,
            lambda: self.lambda,
            sigma: self.sigma,
            seed,
            cycles: self.cycles,
            kp_max: self.kp_max,
            kd_max: self.kd_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub scales: Vec<f64>,
    pub cycles: usize,
    /// rad
    pub angle_noise: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        let d = DatasetConfig::default();
        Self {
            scales: TIME_SCALES.to_vec(),
            cycles: d.cycles,
            angle_noise: d.angle_noise,
        }
    }
}

impl DatasetSection {
    pub fn dataset_config(&self, seed: u64) -> DatasetConfig {
        DatasetConfig {
            scales: self.scales.clone(),
            cycles: self.cycles,
            angle_noise: self.angle_noise,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Zero,
    Assist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub condition: Condition,
    pub cycles: usize,
    /// N·m
    pub tau_max: f64,
    pub scale: f64,
    pub psi: Option<PathBuf>,
    /// Gains file written by `train`; otherwise `[gains]`.
    pub gains_file: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            condition: Condition::Assist,
            cycles: 2,
            tau_max: 10.0,
            scale: 1.0,
            psi: None,
            gains_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub seed: u64,
    pub subject: SubjectConfig,
    pub gains: GainsConfig,
    pub dataset: DatasetSection,
    pub train: TrainConfig,
    pub simulate: SimulateConfig,
    pub runtime: RuntimeConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            subject: SubjectConfig::default(),
            gains: GainsConfig::default(),
            dataset: DatasetSection::default(),
            train: TrainConfig::default(),
            simulate: SimulateConfig::default(),
            runtime: RuntimeConfig::default(),
        }
    }
}

/// Written alongside `psi.ecn` by `train`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsFile {
    pub kp: [f64; 3],
    pub kd: [f64; 3],
}

impl CliConfig {
    /// Reads `path` (defaults when `None`), applies `overrides` in order,
    /// then `seed` if given. Relative paths in the file resolve against
    /// its directory.
    pub fn resolve(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let mut table = match path {
            None => toml::Table::new(),
            Some(p) => {
                if !p.is_file() {
                    return Err(CliError::Usage(format!(
                        "config file {} not found",
                        p.display()
                    )));
                }
                let text = std::fs::read_to_string(p)?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: CliConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.train.seed = cfg.seed;
        if let Some(base) = path.and_then(Path::parent) {
            cfg.rebase(base);
        }
        cfg.runtime.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.runtime.psi);
        if let squat_runtime::SourceConfig::Replay { path } = &mut self.runtime.source {
            fix(path);
        }
        if let Some(p) = &mut self.simulate.psi {
            fix(p);
        }
        if let Some(p) = &mut self.simulate.gains_file {
            fix(p);
        }
    }
}

/// `a.b.c=value`; the value is read as a TOML literal, or as a bare string
/// when it does not parse.
pub fn apply_override(table: &mut toml::Table, arg: &str) -> Result<()> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {arg:?}")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Usage(format!("bad --set key {key:?}")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: {part} is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
