use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use fdee::experiments::{run_to_dir, CampaignSpec, Experiment, SchemeSet};

/// Seeded campaigns for the self-energy-recycling full-duplex small cell.
#[derive(Debug, Parser)]
#[command(name = "fdee", version)]
struct Args {
    /// Flat TOML file with system, channel, solver and campaign keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// convergence, aee or oracle.
    #[arg(long, default_value = "aee")]
    experiment: Experiment,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated SBS budgets in dBm.
    #[arg(long, value_delimiter = ',')]
    sweep_dbm: Option<Vec<f64>>,
    /// harvest, baseline or both.
    #[arg(long)]
    scheme: Option<SchemeSet>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CampaignSpec::from_toml(&text)?
        }
        None => CampaignSpec::default(),
    };
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
        spec.gen.seed = s;
    }
    if let Some(d) = args.sweep_dbm {
        spec.sweep_dbm = d;
    }
    if let Some(s) = args.scheme {
        spec.schemes = s;
    }
    spec.validate()?;
    let files = run_to_dir(&spec, args.experiment, &args.out)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
