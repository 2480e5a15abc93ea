//! `pupilrig`: stream landmark traces into pupil blend-shape coefficients.
//!
//! Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
//! data problems (unreadable/corrupt traces, pipeline failures).

mod commands;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use pupilrig_core::TraceFormat;

#[derive(Parser)]
#[command(name = "pupilrig", version, about = "Pupil blend-shape streaming pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a landmark trace into per-frame blend-shape records.
    Run(RunArgs),
    /// Generate a synthetic landmark trace with ground-truth gaze.
    Synth(SynthArgs),
    /// Score predicted landmarks against ground truth (MAD/MSE IED).
    Eval(EvalArgs),
    /// Dump per-frame calibrator internals as CSV.
    CalibReport(CalibReportArgs),
    /// Measure steady-state pipeline throughput on in-memory frames.
    Bench(BenchArgs),
    /// Configuration helpers.
    Config(ConfigArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Input trace (JSON lines).
    #[arg(long)]
    input: PathBuf,
    /// Output records (JSON lines).
    #[arg(long)]
    output: PathBuf,
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input trace schema.
    #[arg(long, default_value = "refined")]
    format: TraceFormat,
    /// Also write a CSV projection of the coefficients for plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output trace (JSON lines).
    #[arg(long)]
    output: PathBuf,
    /// Pipeline configuration carrying the subject profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of frames (ignored by grid signals, which fix their length).
    #[arg(long, default_value_t = 300)]
    frames: u64,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaze signal: neutral | constant:GX,GY | sine:AX,AY,PERIOD | grid:N.
    #[arg(long, default_value = "neutral")]
    signal: String,
    /// Output trace schema.
    #[arg(long, default_value = "refined")]
    format: TraceFormat,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted landmarks (JSON lines: refined records or bare point lists).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth landmarks, same schema.
    #[arg(long)]
    gt: PathBuf,
    /// Pipeline configuration (index map used to derive the IED).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixed inter-eye distance; required for bare point lists.
    #[arg(long)]
    ied: Option<f64>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CalibReportArgs {
    /// Input trace (JSON lines).
    #[arg(long)]
    input: PathBuf,
    /// CSV output path.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input trace schema.
    #[arg(long, default_value = "refined")]
    format: TraceFormat,
    /// Restrict the report to one eye.
    #[arg(long)]
    eye: Option<String>,
    /// Restrict the report to one direction.
    #[arg(long)]
    direction: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Frames to measure.
    #[arg(long, default_value_t = 10_000)]
    frames: u64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    #[command(subcommand)]
    command: ConfigCommand,
}

#[derive(Subcommand)]
enum ConfigCommand {
    /// Print the full configuration (defaults, or a resolved file).
    Dump {
        /// Existing configuration to resolve and dump instead of defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Command failures, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration: exit 1.
    Usage(String),
    /// Bad input data or processing failure: exit 2.
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => write!(f, "{msg}"),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Synth(args) => commands::synth(args),
        Command::Eval(args) => commands::eval(args),
        Command::CalibReport(args) => commands::calib_report(args),
        Command::Bench(args) => commands::bench(args),
        Command::Config(args) => match args.command {
            ConfigCommand::Dump { config, output } => commands::config_dump(config, output),
        },
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
