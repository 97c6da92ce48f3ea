//! Command-line front end.

mod commands;
mod config;
mod output;

use std::io::Write;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::pairselect::Method;
use crate::sweep::RankBy;
use crate::tradesim::CapitalBasis;

pub use config::{parse_config, parse_list, ConfigError, Layers, CONFIG_KEYS};
pub use output::{sha256_hex, OutputSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_PIPELINE: i32 = 5;
pub const EXIT_IO: i32 = 6;
pub const EXIT_REPORT: i32 = 7;

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  2  usage error or unknown command
  3  invalid configuration (flags or config file)
  4  unreadable or invalid input data
  5  backtest, grid or simulation failure
  6  output could not be written
  7  report failure (returns file, benchmark coverage)

Precedence: flags, then --config file (key = value, keys as flag names with
`_` for `-`), then built-in defaults.";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("pipeline error: {0}")]
    Pipeline(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("report error: {0}")]
    Report(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Pipeline(_) => EXIT_PIPELINE,
            CliError::Io(_) => EXIT_IO,
            CliError::Report(_) => EXIT_REPORT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pairtrade", version, about = "Deterministic pairs-trading backtests", after_help = EXIT_CODES_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one parameter set over the data range.
    Backtest(BacktestArgs),
    /// Evaluate the parameter grid; report base, best and finetuned scenarios.
    Grid(GridCmdArgs),
    /// Walk-forward backtest retuned on the preceding block.
    Adaptive(AdaptiveArgs),
    /// Averaged optimal parameters by execution lag and one-way cost.
    Sensitivity(SensitivityArgs),
    /// Generate a synthetic universe with planted pairs.
    Synth(SynthArgs),
    /// Summarize a returns file by subperiod.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Flat key = value config file.
    #[arg(long)]
    pub config: Option<String>,
    /// Price panel CSV (date,ticker,close,volume).
    #[arg(long)]
    pub data: Option<String>,
    /// Ticker holding the market benchmark; excluded from trading [default: MKT].
    #[arg(long)]
    pub benchmark_ticker: Option<String>,
    /// First date of the range [default: first panel date].
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Last date of the range, inclusive [default: last panel date].
    #[arg(long)]
    pub end: Option<NaiveDate>,
    /// Subperiod table CSV [default: built-in six rows].
    #[arg(long)]
    pub subperiods: Option<String>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<String>,
    /// Worker threads for grid evaluation [default: all cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Top-level seed, recorded in the manifest [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    /// distance or coint [default: distance].
    #[arg(long)]
    pub method: Option<Method>,
    /// Number of pairs traded [default: 20].
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Entry threshold in formation standard deviations [default: 2].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Period-length multiplier on 252/126 days [default: 1].
    #[arg(long)]
    pub multiplier: Option<f64>,
    /// Cointegration p-value cutoff [default: 0.05].
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Days between signal and fill [default: 1].
    #[arg(long)]
    pub lag: Option<usize>,
    /// Flat one-way cost in bps, replacing the subperiod costs.
    #[arg(long)]
    pub cost_bps: Option<f64>,
    /// Annual short-borrow fee, replacing the subperiod fees.
    #[arg(long)]
    pub short_fee: Option<f64>,
    /// committed or employed [default: committed].
    #[arg(long)]
    pub capital_basis: Option<CapitalBasis>,
    /// Allow re-opening a pair after it converges [default: true].
    #[arg(long)]
    pub reentry: Option<bool>,
    /// Rank every cointegrated pair by p-value instead of scanning SSD order [default: false].
    #[arg(long)]
    pub exhaustive: Option<bool>,
    /// ADF lag cap [default: rule of thumb on the formation length].
    #[arg(long)]
    pub max_lag: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// return or sharpe [default: return].
    #[arg(long)]
    pub rank_by: Option<RankBy>,
    /// Pair counts searched [default: 5,10,20,40].
    #[arg(long, value_delimiter = ',')]
    pub grid_pairs: Option<Vec<usize>>,
    /// Entry thresholds searched [default: 0.5,1,1.5,2,2.5,3].
    #[arg(long, value_delimiter = ',')]
    pub grid_thresholds: Option<Vec<f64>>,
    /// Period-length multipliers searched [default: 0.16,0.5,1,1.5].
    #[arg(long, value_delimiter = ',')]
    pub grid_multipliers: Option<Vec<f64>>,
    /// Cointegration cutoffs searched [default: 0.01,0.05,0.1].
    #[arg(long, value_delimiter = ',')]
    pub grid_confidences: Option<Vec<f64>>,
    /// Top results averaged [default: 3].
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Args)]
pub struct GridCmdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct AdaptiveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Block length in months [default: 24].
    #[arg(long)]
    pub retune_months: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Execution lags [default: 0,1].
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    /// One-way cost levels in bps [default: 0,10,20,30,40,50].
    #[arg(long, value_delimiter = ',')]
    pub cost_levels: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Flat key = value config file.
    #[arg(long)]
    pub config: Option<String>,
    /// Number of stocks [default: 40].
    #[arg(long)]
    pub stocks: Option<usize>,
    /// Planted cointegrated pairs [default: 3].
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Trading days [default: 1500].
    #[arg(long)]
    pub days: Option<usize>,
    /// Generator seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Panel CSV to write; the planted-pair and run manifests go next to it [default: universe.csv].
    #[arg(long)]
    pub out: Option<String>,
    /// Hedge ratios, one for all pairs or one per pair [default: 1].
    #[arg(long, value_delimiter = ',')]
    pub hedge_ratio: Option<Vec<f64>>,
    /// Spread mean-reversion speed per day [default: 0.2].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Spread innovation volatility [default: 0.01].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Random-walk volatility [default: 0.015].
    #[arg(long)]
    pub walk_sigma: Option<f64>,
    /// First calendar date [default: 1990-01-02].
    #[arg(long)]
    pub start_date: Option<NaiveDate>,
    /// Stocks with periodic missing days [default: 0].
    #[arg(long)]
    pub gapped: Option<usize>,
    /// Gap period in days [default: 50].
    #[arg(long)]
    pub gap_every: Option<usize>,
    /// Benchmark ticker, or `none` [default: MKT].
    #[arg(long)]
    pub benchmark_ticker: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Daily returns CSV (date,return).
    #[arg(long)]
    pub returns: Option<String>,
    /// Ledger CSV whose entries give the trade counts.
    #[arg(long)]
    pub ledger: Option<String>,
    /// Scenario label [default: strategy].
    #[arg(long)]
    pub scenario: Option<String>,
    /// Print the resolved configuration and subperiod table, then exit.
    #[arg(long)]
    pub show_config: bool,
}

/// Parses `args` (program name first) and runs the command. Diagnostics go
/// to `stderr`; the return value is the process exit code.
pub fn run_command<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "pairtrade: {e}");
            e.exit_code()
        }
    }
}
