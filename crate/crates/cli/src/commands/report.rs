use std::path::PathBuf;

use clap::Args;
use trader_core::evalbench::{aggregate, read_metrics};

use crate::error::{CliError, CliResult};
use crate::output::{prepare_dir, RunManifest};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// metrics.csv written by `bench`.
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let rows = read_metrics(&args.metrics).map_err(|e| CliError::usage(e.to_string()))?;
    let table = aggregate(&rows);
    prepare_dir(&args.out, args.force)?;
    let mut manifest = RunManifest::start("report", 0, serde_json::Value::Null)?;
    let path = args.out.join("report.csv");
    let mut w = std::fs::File::create(&path)?;
    write_report(&mut w, &table)?;
    manifest.output("report.csv");
    manifest.details = serde_json::json!({
        "metrics": args.metrics.display().to_string(),
        "rows_in": rows.len(),
        "rows_out": table.len(),
    });
    manifest.write(&args.out)
}

fn write_report(w: &mut impl std::io::Write, table: &[trader_core::evalbench::AggregateRow]) -> CliResult<()> {
    writeln!(w, "method,setting,stratum,metric,mean,sd,n")?;
    for r in table {
        writeln!(w, "{},{},{},{},{},{},{}", r.method, r.setting, r.stratum, r.metric, r.mean, r.sd, r.n)?;
    }
    Ok(())
}
