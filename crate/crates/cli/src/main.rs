use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghostcs::pipeline::{self, ExperimentConfig, RunReport};
use ghostcs::Error;

#[derive(Parser)]
#[command(
    name = "ghostcs",
    version,
    about = "Complementary compressive ghost imaging simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario for every trial seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the configured trial seeds with this single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// All three matrix modes at each measurement count.
    SweepM {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        ms: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A⁺ and ΔA with TV at each integration interval (seconds).
    SweepPhotons {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        intervals: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    // unreadable config files count as invalid configuration
    ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io { context, source } => Error::Format {
            context: "config".into(),
            reason: format!("{context}: {source}"),
        },
        other => other,
    })
}

fn report(r: &RunReport) {
    println!("wrote {} files to {}", r.files.len() + 1, r.dir.display());
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.trial_seeds = vec![s];
            }
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let r = pipeline::run(&cfg, &dir)?;
            report(&r);
        }
        Command::SweepM { config, ms, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let r =
                pipeline::run_grid(&pipeline::measurement_grid(&cfg, &ms), &dir, "sweep_m.csv")?;
            report(&r);
        }
        Command::SweepPhotons {
            config,
            intervals,
            out,
        } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let r = pipeline::run_grid(
                &pipeline::photon_grid(&cfg, &intervals),
                &dir,
                "sweep_photons.csv",
            )?;
            report(&r);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
