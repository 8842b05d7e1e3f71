//! Declarative runtime configuration.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use squat_core::cpn::PdGains;
use squat_telemetry::{TelemetryConfig, BRIDGE_PORT, COMMAND_PORT, STREAM_PORT};

use crate::error::{Error, Result};
use crate::safety::SafetyLimits;
use crate::source::SimulatedSubject;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ports {
    pub bind: IpAddr,
    pub command: u16,
    pub stream: u16,
    /// Extra stream destinations besides `bind:stream`.
    pub stream_targets: Vec<SocketAddr>,
    pub bridge: u16,
    pub bridge_enabled: bool,
    pub decimation: u32,
}

impl Default for Ports {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            command: COMMAND_PORT,
            stream: STREAM_PORT,
            stream_targets: Vec::new(),
            bridge: BRIDGE_PORT,
            bridge_enabled: true,
            decimation: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    Simulation {
        #[serde(default = "default_height")]
        height: f64,
        #[serde(default = "default_mass")]
        mass: f64,
        #[serde(default = "default_kp")]
        kp: [f64; 3],
        #[serde(default = "default_kd")]
        kd: [f64; 3],
    },
    Replay {
        path: PathBuf,
    },
}

fn default_height() -> f64 {
    1.73
}
fn default_mass() -> f64 {
    86.0
}
fn default_kp() -> [f64; 3] {
    SimulatedSubject::default_gains().kp
}
fn default_kd() -> [f64; 3] {
    SimulatedSubject::default_gains().kd
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Simulation {
            height: default_height(),
            mass: default_mass(),
            kp: default_kp(),
            kd: default_kd(),
        }
    }
}

impl SourceConfig {
    pub fn gains(&self) -> Option<PdGains<f64>> {
        match self {
            SourceConfig::Simulation { kp, kd, .. } => Some(PdGains { kp: *kp, kd: *kd }),
            SourceConfig::Replay { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuntimeConfig {
    /// Network parameter file (ECN1).
    pub psi: PathBuf,
    pub safety: SafetyLimits,
    pub ports: Ports,
    pub source: SourceConfig,
    /// Session length, s; unset runs until interrupted.
    pub duration_s: Option<f64>,
    pub scale: f64,
    /// Per-joint angle offset (hipL, hipR, kneeL, kneeR), rad.
    pub offsets: [f64; 4],
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            psi: PathBuf::from("psi.ecn"),
            safety: SafetyLimits::default(),
            ports: Ports::default(),
            source: SourceConfig::default(),
            duration_s: None,
            scale: 1.0,
            offsets: [0.0; 4],
        }
    }
}

impl RuntimeConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.safety.validate()?;
        if !(0.0..=1.0).contains(&self.scale) {
            return Err(Error::Config(format!(
                "scale {} outside [0, 1]",
                self.scale
            )));
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("duration_s {d} must be positive")));
            }
        }
        if !self.offsets.iter().all(|o| o.is_finite()) {
            return Err(Error::Config("offsets must be finite".into()));
        }
        if self.ports.decimation == 0 {
            return Err(Error::Config("ports.decimation must be at least 1".into()));
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> Option<u64> {
        self.duration_s.map(|s| (s * 1000.0).round() as u64)
    }

    pub fn telemetry(&self) -> TelemetryConfig {
        let mut targets = vec![SocketAddr::new(self.ports.bind, self.ports.stream)];
        targets.extend(self.ports.stream_targets.iter().copied());
        TelemetryConfig {
            bind: self.ports.bind,
            command_port: self.ports.command,
            stream_targets: targets,
            bridge_port: self.ports.bridge_enabled.then_some(self.ports.bridge),
            decimation: self.ports.decimation,
            ..TelemetryConfig::default()
        }
    }
}
