//! `lpir`: tradeoff sweeps, exponent inversion, audits, simulation and LP verification.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or guard error, 3 verification failure.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lpir", version, about = "Leaky PIR on the permuted TSC code")]
struct Cli {
    /// Read every epsilon flag in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download cost curves over a uniform epsilon grid.
    Tradeoff(TradeoffArgs),
    /// Leakage exponents needed to reach a download cost.
    Exponent(ExponentArgs),
    /// Exhaustive leakage, cost and decoding audit of an allocation.
    Audit(AuditArgs),
    /// Monte Carlo estimate of the download cost.
    Simulate(SimulateArgs),
    /// Solve both allocation LPs and check the KKT certificate.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Shape {
    /// Number of servers N.
    #[arg(long = "n")]
    n: usize,
    /// Number of messages K.
    #[arg(long = "k")]
    k: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum Scheme {
    Tsc,
    Samy,
}

#[derive(Debug, Args)]
struct TradeoffArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eps_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    eps_max: f64,
    #[arg(long, default_value_t = 51)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct ExponentArgs {
    #[command(flatten)]
    shape: Shape,
    /// Target normalized download cost D.
    #[arg(long, allow_negative_numbers = true)]
    d: f64,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = Scheme::Tsc)]
    scheme: Scheme,
    /// Seed of the random message store used for the decoding check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Requested message, 1-based.
    #[arg(long, default_value_t = 1)]
    message_index: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
    /// Skip the full-permutation LP.
    #[arg(long)]
    skip_p1: bool,
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
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(&cli, &argv) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
