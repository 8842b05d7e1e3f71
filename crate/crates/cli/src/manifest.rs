//! `manifest.json`: everything needed to repeat a run.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::CliConfig;
use crate::error::Result;
use crate::Cli;

/// Files a subcommand wrote, keyed by role, plus scalar results.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Outputs {
    pub files: BTreeMap<String, PathBuf>,
    pub results: BTreeMap<String, serde_json::Value>,
}

impl Outputs {
    pub fn file(&mut self, role: &str, path: PathBuf) {
        self.files.insert(role.to_string(), path);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    args: Vec<String>,
    seed: u64,
    config_file: Option<&'a std::path::Path>,
    overrides: &'a [String],
    config: &'a CliConfig,
    versions: BTreeMap<&'static str, &'static str>,
    outputs: &'a Outputs,
}

pub fn write(cli: &Cli, cfg: &CliConfig, outputs: &Outputs) -> Result<()> {
    let versions = BTreeMap::from([
        ("squat-cli", env!("CARGO_PKG_VERSION")),
        ("squat-core", squat_core::PKG_VERSION),
        ("squat-runtime", squat_runtime::PKG_VERSION),
        ("squat-telemetry", squat_telemetry::PKG_VERSION),
    ]);
    let m = Manifest {
        subcommand: cli.command.name(),
        args: std::env::args().collect(),
        seed: cfg.seed,
        config_file: cli.global.config.as_deref(),
        overrides: &cli.global.overrides,
        config: cfg,
        versions,
        outputs,
    };
    let path = cli.global.out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}
