//! `shapgame`: solve games, explain them with Shapley values, and evaluate
//! strategies. See `shapgame --help`.

mod commands;
mod config;
mod error;
mod output;
mod selector;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Run;
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "shapgame", version, about = "Equilibria and Shapley feature importance for imperfect-information games")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    /// Output directory (default: [output] dir, then $SHAPGAME_OUT_DIR, then ./shapgame-out).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    /// Only report errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

/// Accepted before and after the subcommand; all occurrences apply in order.
#[derive(Args, Default)]
struct Overrides {
    /// Override a configuration value, e.g. `--set solver.iterations=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate an equilibrium; writes strategy.json and convergence.csv.
    Solve {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Game feature importance over all feature coalitions.
    Sgfi {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Strategy feature importance at one infoset.
    Ssfi {
        /// Strategy file to explain (default: [ssfi] strategy, or solve inline).
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Exploitability of a strategy file.
    Eval {
        /// Strategy file (default: [eval] strategy).
        strategy: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List the infosets of a player with their actions and features.
    Enumerate {
        /// Player 1 or 2 (default: the target player).
        #[arg(long)]
        player: Option<u8>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

impl Command {
    fn overrides(&self) -> &[String] {
        match self {
            Command::Solve { overrides }
            | Command::Sgfi { overrides }
            | Command::Ssfi { overrides, .. }
            | Command::Eval { overrides, .. }
            | Command::Enumerate { overrides, .. } => &overrides.set,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides: Vec<String> = cli
        .overrides
        .set
        .iter()
        .chain(cli.command.overrides())
        .cloned()
        .collect();
    let mut config = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    if let Command::Ssfi { strategy: Some(path), .. } = &cli.command {
        config.ssfi.strategy = Some(path.clone());
    }
    let run = Run::new(config, cli.out, cli.quiet)?;
    match cli.command {
        Command::Solve { .. } => commands::solve(run),
        Command::Sgfi { .. } => commands::sgfi(run),
        Command::Ssfi { .. } => commands::ssfi(run),
        Command::Eval { strategy, .. } => commands::eval(run, strategy),
        Command::Enumerate { player, .. } => commands::enumerate(run, player),
    }?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
