//! `isiw`: simulate preferentially sampled geostatistical data, estimate
//! sampling intensities, fit weighted likelihoods, krige, and run the
//! simulation harness.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] isiw_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use isiw_core::Error as E;
        match self {
            CliError::Core(
                E::NotPositiveDefinite { .. }
                | E::Numerical(_)
                | E::DegenerateConditional { .. }
                | E::RetryBudgetExhausted { .. }
                | E::NoPairs,
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "isiw", version, about = "Inverse sampling intensity weighting for preferentially sampled geostatistical data")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Root random seed [default: 1, or the config file's seed].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Experiment configuration file (key = value text).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Fitting method: MLE-exact, Vecchia, ISIW-V or ISIW-PM.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Weight source: a bandwidth selector (scott, diggle, ppl, CvL, CvL.adaptive) or a CSV with a `weight` column.
    #[arg(long, global = true)]
    pub weights: Option<String>,
    /// Bandwidth selector name, or a number for a fixed bandwidth.
    #[arg(long, global = true)]
    pub bandwidth: Option<String>,
    /// Vecchia conditioning-set size.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Winsorization threshold on normalized intensities.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
}

impl Global {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Cells per axis.
    #[arg(long, default_value_t = 48)]
    pub grid: usize,
    /// Domain as x_min,x_max,y_min,y_max.
    #[arg(long, default_value = "0,1,0,1")]
    pub domain: String,
    #[arg(long, default_value_t = 1.5)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0.15)]
    pub phi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// lgcp, scp or thomas.
    #[arg(long, default_value = "lgcp")]
    pub sampler: String,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 4.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau2: f64,
}

#[derive(Debug, Args)]
pub struct IntensityArgs {
    /// CSV with `x,y` columns.
    #[arg(long)]
    pub points: PathBuf,
    /// Evaluation grid cells per axis.
    #[arg(long, default_value_t = 48)]
    pub grid: usize,
    /// Domain as x_min,x_max,y_min,y_max; defaults to the padded bounding box.
    #[arg(long)]
    pub domain: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with header `x,y,value`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    /// Domain as x_min,x_max,y_min,y_max; defaults to the padded bounding box.
    #[arg(long)]
    pub domain: Option<String>,
    /// Distance cutoff for pairwise-marginal terms.
    #[arg(long)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KrigeArgs {
    /// CSV with header `x,y,value`.
    #[arg(long)]
    pub data: PathBuf,
    /// A fit report file, or inline `mu=..,sigma2=..,phi=..,nu=..,tau2=..`.
    #[arg(long)]
    pub params: String,
    #[arg(long, default_value_t = 48)]
    pub grid: usize,
    /// Domain as x_min,x_max,y_min,y_max; defaults to the padded bounding box.
    #[arg(long)]
    pub domain: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a Matérn field on a grid and write field.csv (x,y,s).
    Simulate(FieldArgs),
    /// Simulate a field, draw a preferential sample and write field.csv, points.csv and data.csv.
    Sample(SampleArgs),
    /// Estimate the sampling intensity of a point pattern and write lambda.csv and weights.csv.
    Intensity(IntensityArgs),
    /// Fit a model to x,y,value data and write fit.txt.
    Fit(FitArgs),
    /// Krige onto grid cell centers and write surface.csv (x,y,pred,var).
    Krige(KrigeArgs),
    /// Run a simulation experiment described by --config.
    Experiment,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
