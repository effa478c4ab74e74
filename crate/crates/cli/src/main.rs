use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use dre_cli::{run_path, RunOptions};
use dre_core::network::DreModel;

/// Deep regression ensembles: experiments, theory curves and model inspection.
#[derive(Parser)]
#[command(name = "dre", version)]
struct Cli {
    /// Worker threads for training (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        /// Run a single seed instead of the config's list.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Write outputs here instead of the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print a summary of a saved model.
    Inspect { model: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run {
            config,
            seed_override,
            output_dir,
        } => {
            let summary = run_path(&config, &RunOptions { seed_override, output_dir })?;
            for f in &summary.files {
                println!("{}", summary.output_dir.join(f).display());
            }
        }
        Command::Inspect { model } => {
            let m = DreModel::load(&model).with_context(|| format!("reading model {}", model.display()))?;
            print!("{}", m.summary());
        }
    }
    Ok(())
}
