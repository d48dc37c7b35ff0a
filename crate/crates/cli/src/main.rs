mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regen::cost_model::Scheme;
use regen::ratio::Rational;
use regen::sim::Strategy;

use crate::commands::CliError;

/// Coordinated and adaptive regenerating codes: costs, tradeoffs,
/// min-cut verification, a working codec and repair simulations.
#[derive(Debug, Parser)]
#[command(name = "regen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Storage and repair cost of each scheme
    Costs(CostsArgs),
    /// Optimal storage/repair tradeoff curve as CSV
    Tradeoff(TradeoffArgs),
    /// Check every recovery scenario of a cost point
    Verify(VerifyArgs),
    /// Encode a file into device block files
    Encode(EncodeArgs),
    /// Regenerate missing device files
    Repair(RepairArgs),
    /// Rebuild the original file from device files
    Decode(DecodeArgs),
    /// Repair cost sweeps and codec traces as CSV
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointArg {
    Mscr,
    Mbcr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WidthArg {
    #[value(name = "8")]
    W8,
    #[value(name = "16")]
    W16,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    #[arg(short = 'k', long = "k")]
    pub k: usize,
    /// Donors per repair (defaults to k)
    #[arg(short = 'd', long = "d")]
    pub d: Option<usize>,
    /// Devices repaired together (defaults to 1)
    #[arg(short = 't', long = "t")]
    pub t: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CostsArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// File size, e.g. 32MB, 120KB, 4096B
    #[arg(short = 'M', long = "file-size", value_parser = parse::size)]
    pub file_size: Rational,
    /// The six reference schemes
    #[arg(long, conflicts_with = "scheme")]
    pub all: bool,
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Vec<Scheme>,
    /// Print exact rationals instead of rounded MB
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[arg(short = 'k', long = "k")]
    pub k: usize,
    #[arg(short = 'd', long = "d")]
    pub d: usize,
    /// Group sizes, e.g. 1,2,4
    #[arg(short = 't', long = "t", value_parser = parse::usize_list, default_value = "1")]
    pub t: parse::List,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, value_enum, default_value = "mscr")]
    pub point: PointArg,
    /// Also compute each min-cut with max-flow (k <= 6)
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_parser = parse::decimal)]
    pub beta_scale: Option<Rational>,
    #[arg(long, value_parser = parse::decimal)]
    pub beta_prime_scale: Option<Rational>,
    /// File size (defaults to k, so amounts are in units of M/k)
    #[arg(short = 'M', long = "file-size", value_parser = parse::size)]
    pub file_size: Option<Rational>,
    /// Write the witness (or a binding) scenario graph in DOT format
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, value_enum, default_value = "mscr")]
    pub point: PointArg,
    #[arg(long, value_enum, default_value = "16")]
    pub width: WidthArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, value_enum, default_value = "mscr")]
    pub point: PointArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Redraw stored combinations after a local rank loss
    #[arg(long)]
    pub redraw: bool,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(short = 'k', long = "k")]
    pub k: usize,
    /// Device slots to read (defaults to the first k present)
    #[arg(long, value_parser = parse::usize_list)]
    pub devices: Option<parse::List>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Parameter preset: 8 (k=32, d=48) or 11 (n=64, k=32)
    #[arg(long, value_parser = clap::value_parser!(u8).range(8..=11))]
    pub figure: Option<u8>,
    /// Comma-separated strategies
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    pub strategy: Vec<Strategy>,
    #[arg(short = 'k', long = "k")]
    pub k: Option<usize>,
    #[arg(short = 'd', long = "d")]
    pub d: Option<usize>,
    #[arg(short = 'n', long = "n")]
    pub n: Option<usize>,
    /// Batch sizes, e.g. 1..16 or 1,2,4
    #[arg(short = 't', long = "t", value_parser = parse::usize_list)]
    pub t: Option<parse::List>,
    #[arg(short = 'M', long = "file-size", value_parser = parse::size, default_value = "32MB")]
    pub file_size: Rational,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run repairs through the codec instead of the formulas
    #[arg(long)]
    pub codec: bool,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    /// Codec runs: bytes of random data to encode
    #[arg(long, default_value_t = 120_000)]
    pub file_len: usize,
    #[arg(long, value_enum, default_value = "16")]
    pub width: WidthArg,
    /// Codec runs: split each unit this many times
    #[arg(long, default_value_t = 1)]
    pub granularity: usize,
    /// Codec runs: override the per-donor transfer, in (refined) units
    #[arg(long)]
    pub beta_units: Option<usize>,
    #[arg(long)]
    pub beta_prime_units: Option<usize>,
    /// Codec runs: always fail the devices longest without repair
    #[arg(long)]
    pub adversarial: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::parse(s).ok_or_else(|| format!("unknown scheme {s:?} (one of ecc_eager, ecc_lazy, msr, mbr, mfr, mscr, mbcr)"))
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::parse(s).ok_or_else(|| format!("unknown strategy {s:?} (one of ecc_eager, ecc_lazy, msr, mbr, mscr, mbcr, arc, mfr)"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Costs(a) => commands::emit(&commands::costs(&a)?, None),
        Command::Tradeoff(a) => commands::emit(&commands::tradeoff(&a)?, a.out.as_deref()),
        Command::Verify(a) => {
            let (text, pass) = commands::verify(&a)?;
            commands::emit(&text, None)?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Infeasible("some recovery scenario carries less than M".into()))
            }
        }
        Command::Encode(a) => commands::emit(&commands::encode(&a)?, None),
        Command::Repair(a) => commands::emit(&commands::repair(&a)?, None),
        Command::Decode(a) => commands::emit(&commands::decode(&a)?, None),
        Command::Simulate(a) => commands::emit(&commands::simulate(&a)?, a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
