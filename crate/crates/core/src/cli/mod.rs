//! Batch front end of the `pcion` binary: JSON configs, cached runs and sweeps.

pub mod cache;
pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use cache::{Cache, CacheEntry, CacheKey};
pub use config::{IndexSpec, PointSpec, RunConfig, StackSpec, SweepGrid};
pub use run::{compute_point, run, sweep, RunOptions};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "pcion", version, about = "Photonic-crystal electron mass correction and ionization shifts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Computes one configuration and writes its tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
        figure: Option<u8>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Computes every point of the config's sweep grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn options(cfg: &RunConfig, out: Option<PathBuf>, figure: Option<u8>, workers: Option<usize>) -> Result<RunOptions, Error> {
    if workers == Some(0) {
        return Err(Error::Config("--workers must be >= 1".into()));
    }
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    Ok(RunOptions {
        out,
        figure,
        workers,
        cache: Cache::from_env(),
    })
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run {
            config,
            out,
            figure,
            workers,
        } => RunConfig::load(&config)
            .and_then(|cfg| options(&cfg, out, figure, workers).map(|o| (cfg, o)))
            .and_then(|(cfg, o)| run(&cfg, &o).map(|_| run::EXIT_OK)),
        Command::Sweep { config, out, workers } => RunConfig::load(&config)
            .and_then(|cfg| options(&cfg, out, None, workers).map(|o| (cfg, o)))
            .and_then(|(cfg, o)| sweep(&cfg, &o))
            .map(|s| {
                if s.failed > 0 {
                    eprintln!(
                        "{}",
                        serde_json::json!({"error": {"kind": "partial_sweep", "failed": s.failed, "rows": s.rows,
                            "exit_code": run::EXIT_PARTIAL_SWEEP}})
                    );
                    run::EXIT_PARTIAL_SWEEP
                } else {
                    run::EXIT_OK
                }
            }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", run::error_json(&e));
            run::exit_code(&e)
        }
    }
}
