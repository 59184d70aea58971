//! Sampler settings from a flat TOML file, overridden by command-line flags.

use std::path::Path;

use clap::Args;
use trader_core::TraderConfig;

use crate::error::{CliError, CliResult};

/// Flags shared by `fit` and `bench`. Any flag given wins over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` file with sampler settings.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Prior guess of the number of informative coefficients (default p/2).
    #[arg(long)]
    pub psi_hat: Option<f64>,
    /// Fixed global scale instead of the informative-count rule.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub ci_level: Option<f64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
}

pub fn parse_config(text: &str) -> CliResult<TraderConfig> {
    toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
}

fn read_config(path: &Path) -> CliResult<TraderConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

impl ConfigArgs {
    pub fn resolve(&self, seed: Option<u64>) -> CliResult<TraderConfig> {
        let mut c = match &self.config {
            Some(p) => read_config(p)?,
            None => TraderConfig::default(),
        };
        if let Some(v) = self.warmup {
            c.n_warmup = v;
        }
        if let Some(v) = self.samples {
            c.n_samples = v;
        }
        if let Some(v) = self.chains {
            c.n_chains = v;
        }
        if self.psi_hat.is_some() {
            c.psi_hat = self.psi_hat;
        }
        if self.tau.is_some() {
            c.tau_override = self.tau;
        }
        if let Some(v) = self.ci_level {
            c.ci_level = v;
        }
        if let Some(v) = self.validation_fraction {
            c.validation_fraction = v;
        }
        if let Some(s) = seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }
}
