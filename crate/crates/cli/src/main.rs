use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

pub const SEED_ENV: &str = "FOURIER_TOMO_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "fourier-tomo",
    version,
    about = "Pure-state tomography with partial Fourier bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit the basis-change circuits of a protocol.
    GenCircuit(GenCircuitArgs),
    /// Simulate noisy protocol runs over a parameter grid and write fidelities as CSV.
    Sweep(SweepArgs),
    /// Reconstruct a state from counts files.
    Reconstruct(ReconstructArgs),
    /// Run the built-in invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CircuitFormat {
    Qasm,
    UnitaryDump,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Estimator {
    #[default]
    Atan2,
    Tangent,
}

#[derive(Debug, Args)]
struct ExecArgs {
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct GenCircuitArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    protocol: u8,
    /// Number of data qubits.
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "qasm")]
    format: CircuitFormat,
    /// Omit the final measurements from QASM output.
    #[arg(long)]
    no_measure: bool,
    /// Output file. Protocol 2 writes `<stem>_d1.<ext>` and `<stem>_d2.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated protocols.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    protocol: Vec<u8>,
    /// Comma-separated data-qubit counts.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Comma-separated white-noise strengths.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    lambda: Vec<f64>,
    /// Comma-separated shots per setting, `0` for exact probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    shots: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Per-trial CSV.
    #[arg(long)]
    out: PathBuf,
    /// Per-cell mean and std CSV. Defaults to `<stem>_aggregate.csv` next to `--out`.
    #[arg(long)]
    aggregate: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "atan2")]
    estimator: Estimator,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    protocol: u8,
    /// Number of data qubits.
    #[arg(long)]
    n: usize,
    /// `setting=path`, one per setting: `z` plus `c1_phi0`, `c1_phi1` or `d1`, `d2`.
    #[arg(long = "counts", value_name = "SETTING=PATH", required = true)]
    counts: Vec<String>,
    /// JSON file `{"amplitudes": [[re, im], ...]}` to compare against.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Write the full result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "atan2")]
    estimator: Estimator,
    /// Invert three-point cosines without clamping them to [-1, 1].
    #[arg(long)]
    no_clamp: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Largest number of data qubits to check (at most 6).
    #[arg(long, default_value_t = 3)]
    max_n: usize,
    #[command(flatten)]
    exec: ExecArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::GenCircuit(args) => commands::gen_circuit(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Reconstruct(args) => commands::reconstruct(args),
        Command::Verify(args) => commands::verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl From<Estimator> for fourier_tomo::reconstruct::PhaseEstimator {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Atan2 => Self::Atan2,
            Estimator::Tangent => Self::Tangent,
        }
    }
}

impl ExecArgs {
    fn exec(&self) -> fourier_tomo::Exec {
        if self.sequential {
            fourier_tomo::Exec::Sequential
        } else {
            fourier_tomo::Exec::Parallel
        }
    }
}
