use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod series;

/// PMM2 estimation for ARIMA models with skewed innovations.
#[derive(Parser, Debug)]
#[command(name = "pmm2", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate an ARIMA series and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a model to a CSV series and print a JSON report.
    Fit(FitArgs),
    /// Recommend CSS or PMM2 from the baseline residual cumulants.
    Select(SelectArgs),
    /// Run a Monte Carlo experiment from a TOML config.
    Mc(McArgs),
    /// Out-of-sample one-step validation of CSS against PMM2.
    Validate(ValidateArgs),
}

#[derive(clap::Args, Debug)]
pub struct ModelArgs {
    /// Model order as p,d,q.
    #[arg(long, value_parser = commands::parse_order)]
    pub model: (usize, usize, usize),
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub order: ModelArgs,
    /// AR coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub phi: Vec<f64>,
    /// MA coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    /// Constant on the differenced scale.
    #[arg(long, allow_negative_numbers = true)]
    pub constant: Option<f64>,
    /// Innovation law: gaussian, gamma, lognormal or chisquare, optionally
    /// with parameters such as `gamma:shape=3` or `lognormal:sdlog=0.5`.
    #[arg(long, default_value = "gaussian")]
    pub innovation: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = pmm2_arima::arima::DEFAULT_BURN_IN)]
    pub burn_in: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Ols,
    Css,
    Pmm2,
    Both,
}

#[derive(clap::Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub order: ModelArgs,
    #[arg(long, value_enum, default_value_t = FitMethod::Both)]
    pub method: FitMethod,
    /// Fit a constant instead of demeaning.
    #[arg(long)]
    pub intercept: bool,
    /// Re-estimate the moments from PMM2 residuals until they settle.
    #[arg(long)]
    pub adaptive: bool,
    /// Ljung-Box lags.
    #[arg(long, default_value_t = 10)]
    pub lags: usize,
    /// Leave out wall-clock timings for byte-stable output.
    #[arg(long)]
    pub omit_timing: bool,
}

#[derive(clap::Args, Debug)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub order: ModelArgs,
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, default_value_t = 0.5)]
    pub gamma3_threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma4_threshold: f64,
    #[arg(long, default_value_t = 200)]
    pub min_n: usize,
    #[arg(long, default_value_t = 1.2)]
    pub re_min: f64,
}

#[derive(clap::Args, Debug)]
pub struct McArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for report.csv, summary.json and re_curve.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "PMM2_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fixed,
    Rolling,
}

#[derive(clap::Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub order: ModelArgs,
    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    pub mode: Mode,
    /// Training fraction for the fixed split.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    /// Window length for rolling mode.
    #[arg(long)]
    pub window: Option<usize>,
    /// Refit cadence in rolling mode.
    #[arg(long, default_value_t = 1)]
    pub refit_every: usize,
    #[arg(long)]
    pub intercept: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Select(a) => commands::select(&a),
        Command::Mc(a) => commands::mc(&a),
        Command::Validate(a) => commands::validate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
