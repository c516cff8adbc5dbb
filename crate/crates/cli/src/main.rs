use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shaper_cli::commands;
use shaper_cli::CliError;

/// Compile co-safe task specifications to reward-annotated automata and
/// run shaped-reward reinforcement-learning experiments.
#[derive(Debug, Parser)]
#[command(name = "shaper", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile the task automaton and report distances and partition.
    Compile {
        /// Experiment config (TOML).
        config: PathBuf,
        /// Load this automaton JSON instead of compiling the formula.
        #[arg(long)]
        automaton: Option<PathBuf>,
        /// Artifact directory (defaults to the config's output dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train all trials and write metrics, round audit, and summary.
    Run {
        config: PathBuf,
        /// Output directory (defaults to the config's output dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and print the aggregate summary without writing artifacts.
    Evaluate { config: PathBuf },
    /// Exact-oracle checks on the enumerated product (JSON report).
    Oracle {
        config: PathBuf,
        /// Also run the bundled example-task verification suite.
        #[arg(long)]
        examples: bool,
        /// Write the JSON report to this file as well as stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment once per θ value.
    Sweep {
        config: PathBuf,
        /// θ values (comma-separated); defaults to the config's [sweep].
        #[arg(long, value_delimiter = ',')]
        theta: Vec<f64>,
        /// Base output directory; each θ gets a subdirectory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compile {
            config,
            automaton,
            out,
        } => commands::cmd_compile(&config, automaton.as_deref(), out.as_deref()),
        Command::Run { config, out } => commands::cmd_run(&config, out.as_deref()),
        Command::Evaluate { config } => commands::cmd_evaluate(&config),
        Command::Oracle {
            config,
            examples,
            out,
        } => commands::cmd_oracle(&config, examples, out.as_deref()),
        Command::Sweep { config, theta, out } => {
            commands::cmd_sweep(&config, &theta, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successes; anything else is usage
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
