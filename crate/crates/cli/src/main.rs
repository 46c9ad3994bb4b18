//! `cortical`: runs operator, reconstruction, Green function and
//! homogenization experiments from TOML configs.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::Command;

#[derive(Parser, Debug)]
#[command(name = "cortical", version, about)]
struct Cli {
    /// Experiment to run; defaults to the `command` key of the config.
    #[arg(value_enum)]
    command: Option<Command>,

    /// TOML experiment config. A manifest from an earlier run also works.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Seed for orientation maps, partitions and conductivities.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (default `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Input image; replaces the config's [input] section.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = run::Overrides {
        command: cli.command,
        config: cli.config,
        seed: cli.seed,
        out_dir: cli.out_dir,
        input: cli.input,
    };
    match run::execute(&overrides) {
        Ok(dir) => {
            eprintln!("wrote {}", run::manifest_path(&dir).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
