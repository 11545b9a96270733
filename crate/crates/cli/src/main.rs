use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use das_cli::commands::{self, BenchArgs, FullInfoArgs, GenerateArgs, ReportArgs, SimulateArgs};
use das_cli::error::{write, CliError};

/// Demand-adaptive bus line planning: instances, exact solves, policy episodes
/// and benchmark sweeps.
#[derive(Parser)]
#[command(name = "das", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded instances with their demand model and report.
    Generate(GenerateArgs),
    /// Solve an instance with every request known upfront.
    Fullinfo(FullInfoArgs),
    /// Run one policy episode; prints a CSV row.
    Simulate(SimulateArgs),
    /// Sweep a csf x walk x scenario-count x policy grid.
    Bench(BenchArgs),
    /// Summarize a bench results.csv per policy and csf.
    Report(ReportArgs),
}

fn stdout(bytes: &[u8]) -> Result<(), CliError> {
    std::io::stdout().write_all(bytes).map_err(|e| CliError::Internal(format!("stdout: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => {
            let paths = commands::generate(&args)?;
            let list: String = paths.iter().map(|p| format!("{}\n", p.display())).collect();
            stdout(list.as_bytes())
        }
        Command::Fullinfo(args) => {
            let doc = commands::fullinfo(&args)?;
            match &args.out {
                Some(path) => write(path, &doc),
                None => stdout(&doc),
            }
        }
        Command::Simulate(args) => stdout(&commands::simulate(&args)?),
        Command::Bench(args) => stdout(commands::bench(&args)?.as_bytes()),
        Command::Report(args) => stdout(commands::report(&args)?.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
