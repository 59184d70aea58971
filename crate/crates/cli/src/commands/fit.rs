use std::path::PathBuf;

use clap::Args;
use trader_core::evalbench::{estimate_sources, Method};
use trader_core::sampler::{diagnostics, fit_horseshoe, fit_trader};
use trader_core::{io, SourceEstimate};

use crate::config::ConfigArgs;
use crate::error::{CliError, CliResult};
use crate::output::{prepare_dir, RunManifest};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Target data: CSV with covariate columns and a `y` column.
    #[arg(long)]
    pub target: PathBuf,
    /// JSON bundle of pre-trained source coefficient vectors.
    #[arg(long)]
    pub sources: Option<PathBuf>,
    /// Raw source datasets; each is fitted with the horseshoe first.
    #[arg(long, num_args = 1..)]
    pub source_data: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "trader")]
    pub method: Method,
    /// Model an intercept for the target.
    #[arg(long)]
    pub intercept: bool,
    /// Model an intercept when fitting raw source datasets.
    #[arg(long)]
    pub source_intercept: bool,
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn load_sources(args: &FitArgs, config: &trader_core::TraderConfig) -> CliResult<Option<Vec<SourceEstimate>>> {
    let mut out: Option<Vec<SourceEstimate>> = None;
    if let Some(p) = &args.sources {
        out = Some(io::load_sources(p)?);
    }
    if !args.source_data.is_empty() {
        let data = args
            .source_data
            .iter()
            .map(|p| io::load_dataset(p, args.source_intercept))
            .collect::<Result<Vec<_>, _>>()?;
        let mut est = estimate_sources(&data, config, config.seed)?;
        let bundle = out.get_or_insert_with(Vec::new);
        let offset = bundle.len();
        for (i, e) in est.iter_mut().enumerate() {
            e.id = format!("source_{}", offset + i + 1);
        }
        bundle.extend(est);
    }
    Ok(out)
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let config = args.config.resolve(Some(args.seed))?;
    let target = io::load_dataset(&args.target, args.intercept)?;
    let sources = load_sources(args, &config)?;
    let sources = match (args.method, sources) {
        (Method::Trader, None) => {
            return Err(CliError::usage(
                "--method trader needs --sources or --source-data (use --method horseshoe without sources)",
            ))
        }
        (Method::Trader, Some(s)) => s,
        (Method::Horseshoe, Some(_)) => {
            eprintln!("warning: sources are ignored by --method horseshoe");
            Vec::new()
        }
        (Method::Horseshoe, None) => Vec::new(),
    };
    trader_core::data::check_source_dims(&sources, target.p())?;
    prepare_dir(&args.out, args.force)?;
    let mut manifest = RunManifest::start("fit", config.seed, &config)?;

    let fit = match args.method {
        Method::Trader => fit_trader(&target, &sources, &config)?,
        Method::Horseshoe => fit_horseshoe(&target, &config)?,
    };

    io::save_draws(&fit.chains, args.out.join("draws"))?;
    manifest.output("draws");
    io::write_summary(args.out.join("summary.csv"), &fit.summary)?;
    manifest.output("summary.csv");
    let diags = diagnostics(&fit.chains)?;
    io::write_diagnostics(args.out.join("diagnostics.csv"), &diags)?;
    manifest.output("diagnostics.csv");
    let flagged = diags.iter().filter(|d| d.flagged).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} parameters flagged as not converged (see diagnostics.csv)");
    }
    if args.method == Method::Trader {
        std::fs::write(
            args.out.join("guide.json"),
            serde_json::to_string_pretty(&fit.guide.record())?,
        )?;
        manifest.output("guide.json");
        if !args.source_data.is_empty() {
            std::fs::write(args.out.join("sources.json"), io::sources_to_json(&sources)?)?;
            manifest.output("sources.json");
        }
    }
    manifest.details = serde_json::json!({
        "method": args.method,
        "n_target": target.n(),
        "n_train": fit.n_train,
        "p": target.p(),
        "n_sources": sources.len(),
        "tau": fit.guide.tau,
        "flagged_parameters": flagged,
    });
    manifest.write(&args.out)
}
