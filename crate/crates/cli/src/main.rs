use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sympkit_cli::commands::{run, Command};
use sympkit_cli::config::RunConfig;
use sympkit_cli::error::CliError;
use sympkit_cli::report::green_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Analyses of discrete symplectic systems with semi-definite weights.
#[derive(Debug, Parser)]
#[command(name = "sympkit", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SYMPKIT_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("SYMPKIT_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn execute(args: &Args) -> Result<i32, CliError> {
    init_threads()?;
    let config = RunConfig::from_path(&args.config)?;
    let outcome = run(args.command, &config)?;
    let bytes = match args.format {
        Format::Json => outcome.report.to_json()?,
        Format::Csv if args.command == Command::GreenSolve => green_csv(&outcome.green_rows)?,
        Format::Csv => outcome.report.checks_csv()?,
    };
    match &args.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|e| CliError::Output(e.to_string()))?;
        }
    }
    Ok(outcome.report.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("sympkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
