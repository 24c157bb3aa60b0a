//! Command-line experiments for PSWF-based band-limited Fourier reconstruction.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{Layer, RunConfig};
use crate::error::{config as config_error, Result};
use crate::output::Outputs;

#[derive(Parser)]
#[command(name = "pswf-recon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the numerical kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    flags: Layer,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Eigenvalues of the band-limited Fourier operator.
    EigenTable,
    /// Cumulative eigen-relation defects and the trusted rank.
    Trust,
    /// 1-d reconstruction with rank selection.
    #[command(name = "reconstruct-1d")]
    Reconstruct1d,
    /// 2-d reconstruction through rays and filtered back projection.
    #[command(name = "reconstruct-2d")]
    Reconstruct2d,
    /// Errors and residuals over a range of ranks.
    SweepN,
    /// Rank selectors compared over several noise seeds.
    NoiseStudy,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::EigenTable => "eigen-table",
            Command::Trust => "trust",
            Command::Reconstruct1d => "reconstruct-1d",
            Command::Reconstruct2d => "reconstruct-2d",
            Command::SweepN => "sweep-n",
            Command::NoiseStudy => "noise-study",
        }
    }

    fn dim(self) -> Option<usize> {
        match self {
            Command::Reconstruct1d => Some(1),
            Command::Reconstruct2d => Some(2),
            _ => None,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error(e.to_string()))?;
    }
    let file = match &cli.config {
        Some(path) => Layer::from_file(path)?,
        None => Layer::default(),
    };
    let cfg = RunConfig::resolve(cli.command.name(), file.overlay(&cli.flags), cli.command.dim())?;
    let start = Instant::now();
    let mut out = Outputs::create(&cfg.out)?;
    match cli.command {
        Command::EigenTable => commands::eigen_table(&cfg, &mut out)?,
        Command::Trust => commands::trust(&cfg, &mut out)?,
        Command::Reconstruct1d | Command::Reconstruct2d => commands::reconstruct(&cfg, &mut out)?,
        Command::SweepN => commands::sweep_n(&cfg, &mut out)?,
        Command::NoiseStudy => commands::noise_study(&cfg, &mut out)?,
    }
    out.write_volatile(
        "timing.json",
        &serde_json::json!({ "command": cfg.command, "seconds": start.elapsed().as_secs_f64() }),
    )?;
    let files = out.finish()?;
    println!("wrote {} to {}", files.join(", "), cfg.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
