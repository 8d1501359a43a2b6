use std::path::PathBuf;
use std::process::ExitCode;

use asymfmo_cli::{run, RunConfig, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "asymfmo",
    version,
    about = "Conductivity-tensor optimization with a thermal Hall term"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the analysis or optimization described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Iteration limit, overriding the config.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Suppress progress output.
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        output,
        max_iters,
        quiet,
    } = cli.command;

    let result = RunConfig::load(&config).and_then(|mut cfg| {
        if let Some(dir) = output {
            cfg.output = dir;
        }
        if let Some(n) = max_iters {
            cfg.optimizer.max_iters = n;
        }
        run(&cfg, RunOptions { quiet })
    });
    match result {
        Ok(summary) => {
            if !quiet {
                for f in &summary.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::from(summary.exit_code())
        }
        Err(e) => {
            eprintln!("asymfmo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
