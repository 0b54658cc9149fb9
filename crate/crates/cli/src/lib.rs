//! Command-line orchestration of the slimmable navigation experiments.

pub mod artifacts;
pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Stage};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "navislim", version, about = "Slimmable drone navigation experiments")]
pub struct Cli {
    /// TOML experiment config; defaults apply to omitted keys.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    /// Override a config key, e.g. `--set world.density=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the procedural worlds.
    GenWorld,
    /// Sample optimal paths and label the train, validation and test sets.
    Oracle,
    /// Distill the slimmable navigation network.
    TrainNav,
    /// Train the auxiliary network with TD3 and check the path-length gate.
    TrainAux,
    /// Evaluate the frozen navigation network and the adaptive system.
    Eval {
        /// Evaluate the navigation network only.
        #[arg(long)]
        skip_aux: bool,
    },
    /// Emit summary tables and plot data from the evaluation logs.
    Report,
    /// Time adaptive against static inference over navigation sizes.
    Bench,
    /// Print the effective config as TOML.
    ShowConfig,
}

/// Runs one command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<Vec<String>> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match &cli.command {
        Command::GenWorld => commands::gen_world(&cfg),
        Command::Oracle => commands::oracle(&cfg),
        Command::TrainNav => commands::train_nav(&cfg),
        Command::TrainAux => commands::train_aux(&cfg),
        Command::Eval { skip_aux } => commands::eval(&cfg, *skip_aux),
        Command::Report => report::report(&cfg),
        Command::Bench => bench::bench(&cfg),
        Command::ShowConfig => Ok(vec![cfg.to_toml()]),
    }
}
