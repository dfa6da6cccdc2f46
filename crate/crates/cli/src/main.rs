// SPDX-License-Identifier: Apache-2.0

use clap::{Args, Parser, Subcommand, ValueEnum};
use pooling_cli::{exit, Overrides, Report};
use pooling_core::equilibrium::ImprovementMode;
use pooling_core::scenario::ScenarioFile;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pooling",
    version,
    about = "Verify and simulate pooling games from a JSON scenario"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check Sybil resilience, egalitarianism and grid additivity of the reward.
    Axioms(Common),
    /// Diagnose the configured pools and check for a strong Nash equilibrium.
    Equilibrium(Common),
    /// Run best-response dynamics and print the move trace.
    Dynamics(Common),
    /// Run the epoch simulator and print one row per epoch.
    Simulate(Common),
    /// Tabulate the emission schedule.
    Emission {
        #[command(flatten)]
        common: Common,
        /// Last epoch to tabulate.
        #[arg(long)]
        through: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Overrides the scenario's improvement mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Owner bound for every exhaustive scan.
    #[arg(long, value_name = "N")]
    max_owners: Option<usize>,
    /// Write the table here; the summary then goes to stdout.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation epochs, iteration bound for dynamics, or table length.
    #[arg(long)]
    epochs: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Pareto,
}

impl From<Mode> for ImprovementMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Strict => ImprovementMode::AllStrictlyBetter,
            Mode::Pareto => ImprovementMode::ParetoImprovement,
        }
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, through) = match &cli.command {
        Command::Emission { common, through } => (common, *through),
        Command::Axioms(c) | Command::Equilibrium(c) | Command::Dynamics(c) | Command::Simulate(c) => (c, None),
    };
    let overrides = Overrides {
        mode: common.mode.map(Into::into),
        max_owners: common.max_owners,
        seed: common.seed,
        epochs: common.epochs,
        through,
    };

    let text = match std::fs::read_to_string(&common.scenario) {
        Ok(text) => text,
        Err(e) => return fail(exit::INPUT_ERROR, format_args!("{}: {e}", common.scenario.display())),
    };
    let file = match ScenarioFile::parse(&text) {
        Ok(file) => file,
        Err(e) => return fail(exit::INPUT_ERROR, e),
    };

    let result = match cli.command {
        Command::Axioms(_) => pooling_cli::axioms(&file, &overrides),
        Command::Equilibrium(_) => pooling_cli::equilibrium(&file, &overrides, common.csv.is_some()),
        Command::Dynamics(_) => pooling_cli::dynamics(&file, &overrides),
        Command::Simulate(_) => pooling_cli::simulate(&file, &overrides),
        Command::Emission { .. } => pooling_cli::emission(&file, &overrides),
    };
    let report = match result {
        Ok(report) => report,
        Err(e) => return fail(pooling_cli::error_exit_code(&e), e),
    };
    match emit(
        &report,
        common.csv.as_ref(),
        matches!(cli.command, Command::Axioms(_) | Command::Equilibrium(_)),
    ) {
        Ok(()) => ExitCode::from(report.exit_code()),
        Err(e) => fail(exit::INPUT_ERROR, e),
    }
}

/// With `--csv` the table goes to the file and the summary to stdout.
/// Otherwise tabular commands print the table on stdout and the summary on
/// stderr, and report commands print only the summary.
fn emit(report: &Report, csv: Option<&PathBuf>, report_command: bool) -> std::io::Result<()> {
    match (csv, &report.table) {
        (Some(path), Some(table)) => {
            std::fs::write(path, table.to_csv())?;
            print!("{}", report.summary);
        }
        (None, Some(table)) if !report_command => {
            print!("{}", table.to_csv());
            eprint!("{}", report.summary);
        }
        _ => print!("{}", report.summary),
    }
    Ok(())
}
