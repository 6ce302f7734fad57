//! `ruelle`: command-line driver for the transfer-operator toolkit.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Run;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "ruelle",
    version,
    about = "Ruelle resonances of partially expanding skew products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to every key left out.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set nu=[10,40]` or `--set cloud.count=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Resonance spectra for each configured nu, plus a union plot.
    Spectrum,
    /// One spectrum frame per nu over `[sweep]` start..=stop.
    Sweep,
    /// Captivity counts N(n) on the phase-space grid.
    Captivity,
    /// Occupancy estimate of the trapped set.
    Trapped,
    /// Stable manifold S(x) and its cohomological residual.
    Manifold,
    /// Complex slice S^c(x + m) of the trapped set.
    Fractal,
    /// Evolve a Gaussian point cloud on the torus.
    Cloud,
    /// Correlation functions and fitted decay rates.
    Correlate,
    /// Spectra of the map and its coboundary-shifted roof.
    GaugeCheck,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let text = match &cli.config {
        Some(path) => Some((
            path.display().to_string(),
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
        )),
        None => None,
    };
    let mut config = config::load(
        text.as_ref().map(|(n, t)| (n.as_str(), t.as_str())),
        &cli.overrides,
    )?;
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    let run = Run::new(config)?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&run),
        Command::Sweep => commands::sweep(&run),
        Command::Captivity => commands::captivity(&run),
        Command::Trapped => commands::trapped(&run),
        Command::Manifold => commands::manifold(&run),
        Command::Fractal => commands::fractal(&run),
        Command::Cloud => commands::cloud(&run),
        Command::Correlate => commands::correlate(&run),
        Command::GaugeCheck => commands::gauge_check(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ruelle: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
