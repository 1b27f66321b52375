use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use bintrack::cli::commands::{
    self, cmd_paperpack, cmd_run, cmd_sweep, CliError, RunOptions, SummaryRow, SweepOptions,
};
use bintrack::cli::trace_io::TraceFormat;

/// Two-vehicle range-only target tracking simulator.
#[derive(Parser)]
#[command(name = "bintrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print its convergence summary.
    Run {
        /// Scenario file, or the name of a built-in scenario (fig3a..fig5).
        scenario: String,
        /// Trace output path; the trace goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: TraceFormat,
        /// Record every N-th step (defaults to the scenario file's setting).
        #[arg(long, value_name = "N", conflicts_with = "full_rate")]
        decimate: Option<usize>,
        /// Record every step.
        #[arg(long)]
        full_rate: bool,
    },
    /// Run a scenario once per value of a parameter.
    Sweep {
        scenario: String,
        /// kappa_c, kappa_eta, kappa_xi, target_speed or dt.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: TraceFormat,
        #[arg(long, value_name = "N")]
        decimate: Option<usize>,
    },
    /// Run all built-in scenarios and write traces and summaries.
    Paperpack {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: TraceFormat,
    },
}

fn print_rows(rows: &[SummaryRow]) {
    print!("{}", commands::summary_table(rows));
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            format,
            decimate,
            full_rate,
        } => {
            let to_stdout = out.is_none();
            let opts = RunOptions {
                out,
                format,
                decimate: if full_rate { Some(1) } else { decimate },
            };
            let outcome = cmd_run(&scenario, &opts)?;
            if let Some(s) = outcome.summary {
                if to_stdout {
                    eprintln!("{s}");
                } else {
                    println!("{s}");
                }
            }
        }
        Command::Sweep {
            scenario,
            param,
            values,
            out,
            format,
            decimate,
        } => {
            let values = commands::parse_values(&values)?;
            let opts = SweepOptions {
                out_dir: out,
                format,
                decimate,
            };
            print_rows(&cmd_sweep(&scenario, &param, &values, &opts)?);
        }
        Command::Paperpack { out, format } => print_rows(&cmd_paperpack(&out, format)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(commands::EXIT_USAGE as u8),
            };
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
