//! Output directories and the run manifest written into each of them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

/// Files and directories a command may have left behind in a previous run.
fn is_ours(name: &str) -> bool {
    matches!(
        name,
        MANIFEST
            | "target.csv"
            | "truth.json"
            | "sources.json"
            | "summary.csv"
            | "diagnostics.csv"
            | "guide.json"
            | "metrics.csv"
            | "report.csv"
            | "draws"
    ) || (name.starts_with("source_") && name.ends_with(".csv"))
}

/// Creates `dir`, or clears a previous run from it when `force` is set.
/// A non-empty directory without `force` is refused so that earlier results
/// and their manifest are never silently replaced.
pub fn prepare_dir(dir: &Path, force: bool) -> CliResult<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(CliError::usage(format!("{} exists and is not a directory", dir.display())));
        }
        let entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        if !entries.is_empty() && !force {
            return Err(CliError::usage(format!(
                "{} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
        for e in entries {
            let name = e.file_name();
            if !is_ours(&name.to_string_lossy()) {
                continue;
            }
            let path = e.path();
            if path.is_dir() {
                fs::remove_dir_all(&path)?;
            } else {
                fs::remove_file(&path)?;
            }
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Record of one command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub version: String,
    pub master_seed: u64,
    pub config: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
    pub failures: Vec<serde_json::Value>,
    /// Command-specific extras (seed table, wall time and so on).
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn start(command: &str, master_seed: u64, config: impl Serialize) -> CliResult<Self> {
        Ok(RunManifest {
            command: command.into(),
            arguments: std::env::args().skip(1).collect(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed,
            config: serde_json::to_value(config)?,
            started_unix: unix_now(),
            finished_unix: 0.0,
            outputs: Vec::new(),
            failures: Vec::new(),
            details: serde_json::Value::Null,
        })
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into().display().to_string());
    }

    pub fn write(mut self, dir: &Path) -> CliResult<()> {
        self.finished_unix = unix_now();
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&self)?)?;
        Ok(())
    }
}
