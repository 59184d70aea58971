use clap::{Args, ValueEnum};
use trader_core::simgen::{Setting, SimSpec, SourceCoupling};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Coupling {
    Independent,
    ConditionalOnTarget,
}

/// Data-generating parameters shared by `simulate` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Simulation setting: 1, 2 or 3.
    #[arg(long)]
    pub setting: u8,
    #[arg(long)]
    pub n0: Option<usize>,
    #[arg(long)]
    pub nk: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of signal coefficients.
    #[arg(long)]
    pub s: Option<usize>,
    /// Contrast bound between target and informative sources.
    #[arg(long)]
    pub h: Option<f64>,
    /// Number of sources.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Number of informative sources; required for setting 2.
    #[arg(long = "Ka")]
    pub k_a: Option<usize>,
    /// Target-to-source scale ratios (setting 3), comma separated. One value is broadcast.
    #[arg(long, value_delimiter = ',')]
    pub scale_ratios: Option<Vec<f64>>,
    /// Target/source correlations (setting 3), comma separated. One value is broadcast.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha_t: Option<f64>,
    #[arg(long, value_enum)]
    pub source_coupling: Option<Coupling>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

fn broadcast(v: Vec<f64>, k: usize) -> Vec<f64> {
    if v.len() == 1 {
        vec![v[0]; k]
    } else {
        v
    }
}

impl SimArgs {
    pub fn to_spec(&self, seed: u64) -> CliResult<SimSpec> {
        let setting = Setting::from_number(self.setting)?;
        let mut spec = SimSpec::new(setting);
        if let Some(k) = self.k {
            spec = spec.with_k(k);
        }
        match (setting, self.k_a) {
            (Setting::II, None) => {
                return Err(CliError::usage("setting 2 requires --Ka (number of informative sources)"))
            }
            (Setting::II, Some(ka)) => spec.k_a = Some(ka),
            (_, Some(_)) => return Err(CliError::usage("--Ka only applies to setting 2")),
            _ => {}
        }
        if setting != Setting::III
            && (self.scale_ratios.is_some() || self.rho.is_some() || self.source_coupling.is_some())
        {
            return Err(CliError::usage(
                "--scale-ratios, --rho and --source-coupling only apply to setting 3",
            ));
        }
        spec.n0 = self.n0.unwrap_or(spec.n0);
        spec.nk = self.nk.unwrap_or(spec.nk);
        spec.p = self.p.unwrap_or(spec.p);
        spec.s = self.s.unwrap_or(spec.s);
        spec.h = self.h.unwrap_or(spec.h);
        spec.alpha_t = self.alpha_t.unwrap_or(spec.alpha_t);
        spec.noise_sd = self.noise_sd.unwrap_or(spec.noise_sd);
        if let Some(r) = &self.scale_ratios {
            spec.scale_ratios = broadcast(r.clone(), spec.k);
        }
        if let Some(r) = &self.rho {
            spec.correlations = broadcast(r.clone(), spec.k);
        }
        if let Some(c) = self.source_coupling {
            spec.source_coupling = match c {
                Coupling::Independent => SourceCoupling::Independent,
                Coupling::ConditionalOnTarget => SourceCoupling::ConditionalOnTarget,
            };
        }
        spec.seed = seed;
        spec.validate()?;
        Ok(spec)
    }
}
