//! `demandid` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 series not classified.

mod commands;
mod config;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use demandid::forecast::InfoCriterion;

#[derive(Debug, Parser)]
#[command(name = "demandid", version, about = "Demand-type identification and forecast method selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a simulated demand series as CSV.
    Simulate(SimulateArgs),
    /// Fit Uniform, Normal and Exponential distributions and name the demand type.
    Classify(ClassifyArgs),
    /// Fit one forecasting method and project it forward.
    Forecast(ForecastArgs),
    /// Backtest every method on one or more series.
    Evaluate(EvaluateArgs),
    /// Classify, evaluate, and recommend a method.
    Recommend(RecommendArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesType {
    Cyclical,
    Stochastic,
    Lumpy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Sawtooth,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ses,
    HwAdd,
    HwMult,
    Stepar,
    Ma,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Aic,
    Aicc,
    Bic,
}

impl From<CriterionArg> for InfoCriterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Aic => InfoCriterion::Aic,
            CriterionArg::Aicc => InfoCriterion::Aicc,
            CriterionArg::Bic => InfoCriterion::Bic,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "type", value_enum)]
    pub kind: SeriesType,
    #[arg(long, default_value_t = 240)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cyclical: mean level.
    #[arg(long, default_value_t = 200.0)]
    pub base: f64,
    /// Cyclical: peak-to-peak amplitude.
    #[arg(long, default_value_t = 60.0)]
    pub amplitude: f64,
    /// Cyclical: cycle length.
    #[arg(long, default_value_t = 12)]
    pub cycle_period: usize,
    #[arg(long, value_enum, default_value_t = Shape::Sawtooth)]
    pub shape: Shape,
    /// Cyclical: trend per period.
    #[arg(long, default_value_t = 0.0)]
    pub trend: f64,
    /// Noise standard deviation [cyclical: amplitude / (4 * cycle period); stochastic: 10].
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Stochastic: autoregressive coefficient.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub ar_alpha: f64,
    /// Stochastic: long-run mean.
    #[arg(long, default_value_t = 200.0)]
    pub mean: f64,
    /// Lumpy: floor every value sits on.
    #[arg(long, default_value_t = 0.0)]
    pub base_level: f64,
    /// Lumpy: mean burst size.
    #[arg(long, default_value_t = 200.0)]
    pub burst_scale: f64,
    /// Lumpy: probability of a period with no burst.
    #[arg(long, default_value_t = 0.5)]
    pub zero_prob: f64,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Input CSV with header `period,value`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Observations per cycle [default: 12].
    #[arg(long)]
    pub period: Option<usize>,
    /// TOML file with default settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyFlags {
    /// Significance level of the goodness-of-fit test [default: 0.05].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bootstrap replicates per family [default: 1000].
    #[arg(long)]
    pub mc: Option<usize>,
    /// Seed for the bootstrap [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Remove a least-squares line before fitting.
    #[arg(long)]
    pub detrend: bool,
    /// Share of periods at the minimum that marks a series as lumpy [default: 0.25].
    #[arg(long)]
    pub zero_ratio_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitFlags {
    /// Fraction of the series held out [default: 0.2].
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Whole cycles the training part must contain [default: 2].
    #[arg(long)]
    pub min_train_cycles: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MethodFlags {
    /// Fixed SES smoothing constant instead of the grid search.
    #[arg(long)]
    pub ses_alpha: Option<f64>,
    /// Fixed Holt-Winters level weight (needs --hw-beta and --hw-gamma).
    #[arg(long, requires_all = ["hw_beta", "hw_gamma"])]
    pub hw_alpha: Option<f64>,
    #[arg(long, requires_all = ["hw_alpha", "hw_gamma"])]
    pub hw_beta: Option<f64>,
    #[arg(long, requires_all = ["hw_alpha", "hw_beta"])]
    pub hw_gamma: Option<f64>,
    /// Largest autoregressive lag considered [default: min(13, n/4)].
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Criterion for dropping lags [default: bic].
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    pub classify: ClassifyFlags,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    #[command(flatten)]
    pub classify: ClassifyFlags,
    #[command(flatten)]
    pub methods: MethodFlags,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// One or more input CSVs, comma separated.
    #[arg(long = "in", value_delimiter = ',', required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Accepted for symmetry with the other commands; evaluation draws no random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub split: SplitFlags,
    #[command(flatten)]
    pub methods: MethodFlags,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    pub classify: ClassifyFlags,
    #[command(flatten)]
    pub split: SplitFlags,
    #[command(flatten)]
    pub methods: MethodFlags,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// What a command printed and how the process should exit.
pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Classify(a) => commands::classify(&a),
        Command::Forecast(a) => commands::forecast(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Recommend(a) => commands::recommend(&a),
    };
    match result {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code)
        }
        Err(e) if e.is::<commands::NotClassified>() => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
