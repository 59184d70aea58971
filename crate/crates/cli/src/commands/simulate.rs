use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use trader_core::{io, simgen};

use super::simargs::SimArgs;
use crate::error::CliResult;
use crate::output::{prepare_dir, RunManifest};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub force: bool,
}

#[derive(Serialize)]
struct Truth<'a> {
    beta: Vec<f64>,
    omega: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    signal_indices: Vec<usize>,
    spec: &'a simgen::SimSpec,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let spec = args.sim.to_spec(args.seed)?;
    prepare_dir(&args.out, args.force)?;
    let mut manifest = RunManifest::start("simulate", spec.seed, &spec)?;
    let inst: trader_core::SimInstance = simgen::generate(&spec)?;

    io::write_dataset(args.out.join("target.csv"), &inst.target)?;
    manifest.output("target.csv");
    for (k, d) in inst.sources.iter().enumerate() {
        let name = format!("source_{}.csv", k + 1);
        io::write_dataset(args.out.join(&name), d)?;
        manifest.output(name);
    }
    let truth = Truth {
        beta: inst.beta_true.to_vec(),
        omega: inst.omega_true.iter().map(|w| w.to_vec()).collect(),
        intercepts: inst.intercepts_true.to_vec(),
        signal_indices: spec.signal_indices(),
        spec: &spec,
    };
    std::fs::write(args.out.join("truth.json"), serde_json::to_string_pretty(&truth)?)?;
    manifest.output("truth.json");
    manifest.write(&args.out)
}
