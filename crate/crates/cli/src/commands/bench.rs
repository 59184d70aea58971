use std::path::PathBuf;

use clap::Args;
use trader_core::evalbench::{run_benchmark, write_metrics, BenchOptions, Method};

use super::simargs::SimArgs;
use crate::config::ConfigArgs;
use crate::error::{CliError, CliResult};
use crate::output::{prepare_dir, RunManifest};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "trader,horseshoe")]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed for data generation and every fit.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Concurrent replications. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Exit non-zero if any replication fails.
    #[arg(long)]
    pub strict: bool,
    /// Replication ids forced to fail (for testing failure handling).
    #[arg(long, value_delimiter = ',')]
    pub inject_failure: Vec<usize>,
    /// Warmup sweeps for the source fits (defaults to the target setting).
    #[arg(long)]
    pub source_warmup: Option<usize>,
    /// Retained draws for the source fits (defaults to the target setting).
    #[arg(long)]
    pub source_samples: Option<usize>,
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    if args.jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let spec = args.sim.to_spec(args.seed)?;
    let config = args.config.resolve(Some(args.seed))?;
    let mut methods = args.methods.clone();
    methods.dedup();
    let mut opts = BenchOptions::new(methods, args.reps, config.clone());
    opts.source_config.n_warmup = args.source_warmup.unwrap_or(config.n_warmup);
    opts.source_config.n_samples = args.source_samples.unwrap_or(config.n_samples);
    opts.jobs = args.jobs;
    opts.inject_failures = args.inject_failure.clone();
    prepare_dir(&args.out, args.force)?;
    let mut manifest = RunManifest::start(
        "bench",
        spec.seed,
        serde_json::json!({ "target": &opts.config, "source": &opts.source_config }),
    )?;

    let result = run_benchmark(&spec, &opts)?;
    write_metrics(args.out.join("metrics.csv"), &result.rows)?;
    manifest.output("metrics.csv");
    for f in &result.failures {
        manifest.failures.push(serde_json::json!({
            "replication": f.replication,
            "message": f.message,
        }));
    }
    manifest.details = serde_json::json!({
        "spec": &spec,
        "reps": args.reps,
        "methods": &opts.methods,
        "jobs": args.jobs,
        "draws_checked": result.draws_checked,
        "wall_time_secs": result.wall_time_secs,
        "seeds": result.seeds.iter().map(|s| serde_json::json!({
            "replication": s.replication,
            "data": s.data,
            "target_fit": s.target_fit,
        })).collect::<Vec<_>>(),
    });
    manifest.write(&args.out)?;

    if !result.failures.is_empty() {
        let ids: Vec<String> = result.failures.iter().map(|f| f.replication.to_string()).collect();
        let msg = format!(
            "{} of {} replications failed (ids {}); they are excluded from metrics.csv",
            result.failures.len(),
            args.reps,
            ids.join(", ")
        );
        if args.strict {
            return Err(CliError::Numerical(msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(())
}
