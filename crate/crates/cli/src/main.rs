//! `trader`: simulate data, fit source-guided or plain horseshoe regressions,
//! run benchmarks and summarise them.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};

use commands::{bench, fit, report, simulate};

#[derive(Debug, Parser)]
#[command(name = "trader", version, about = "Source-guided horseshoe regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// parsed once per process, so the size of the largest variant does not matter
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a target dataset, source datasets and the true coefficients.
    Simulate(simulate::SimulateArgs),
    /// Fit a model and write draws, a posterior summary and diagnostics.
    Fit(fit::FitArgs),
    /// Run replicated simulations and write per-replication metrics.
    Bench(bench::BenchArgs),
    /// Aggregate a metrics file into mean and sd per method, stratum and metric.
    Report(report::ReportArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let res = match &cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Report(a) => report::run(a),
    };
    if let Err(e) = res {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
