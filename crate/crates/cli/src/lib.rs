//! `mforge` command line: dataset generation, training, evaluation,
//! ablations, sweeps and SVG plots.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical error, 4 I/O error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mforge_core::Error;

pub mod commands;
pub mod manifest;
pub mod plot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "MFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "mforge",
    version,
    about = "Manifold reconstruction and regularized autoencoder embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory.
    Generate(GenerateArgs),
    /// Train a model and write a run directory.
    Train(TrainCmdArgs),
    /// Compare two clouds with corresponding rows.
    Evaluate(EvaluateArgs),
    /// Train all six ablation configurations and evaluate the three groups.
    Ablate(AblateArgs),
    /// Train over a grid of noise levels, sizes, dimensions or loss weights.
    Sweep(SweepArgs),
    /// Render a 2-D embedding as an SVG scatter plot.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetName {
    SwissRoll,
    Spheres,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: DatasetName,
    /// Number of points; per sphere for the spheres dataset.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ambient dimension of the spheres dataset.
    #[arg(long, default_value_t = 101)]
    pub dim: usize,
    /// Number of small spheres.
    #[arg(long, default_value_t = 8)]
    pub n_small: usize,
    /// Radius of the enclosing sphere.
    #[arg(long, default_value_t = 5.0)]
    pub radius: f64,
    /// Keep raw coordinates instead of scaling each axis to [0, 1].
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Configuration sources and overrides shared by train, ablate and sweep.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainOverrides {
    /// Base preset: swiss-roll, mammoth, partnet or spheres.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON training configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lambda_ae: Option<f64>,
    #[arg(long)]
    pub lambda_topo: Option<f64>,
    #[arg(long)]
    pub lambda_geom: Option<f64>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Keep the contraction radii fixed during training.
    #[arg(long)]
    pub fixed_radii: bool,
    #[arg(long)]
    pub no_mrl: bool,
    #[arg(long)]
    pub no_topo: bool,
    #[arg(long)]
    pub no_geom: bool,
    /// Include 1-dimensional persistence pairs in the topological loss.
    #[arg(long)]
    pub h1: bool,
}

#[derive(Debug, Args)]
pub struct TrainCmdArgs {
    /// Dataset directory (points.csv, optional labels.csv and clean.csv) or
    /// a single .csv or .json point file.
    #[arg(long)]
    pub dataset: PathBuf,
    /// 0-based label column of a single CSV file.
    #[arg(long)]
    pub label_column: Option<usize>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Reference cloud: a .csv/.json file or a dataset directory.
    pub a: PathBuf,
    /// Compared cloud with the same number of rows.
    pub b: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub label_column: Option<usize>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisName {
    Noise,
    Size,
    Dim,
    LambdaGrid,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub axis: AxisName,
    #[arg(long, requires_all = ["stop", "step"], conflicts_with = "values")]
    pub start: Option<f64>,
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Explicit comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Points in the dataset; per sphere on the dim axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise level for axes other than noise.
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    /// Dataset seed.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Two-column embedding CSV.
    pub embedding: PathBuf,
    /// Single-column label CSV with one row per point.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Process exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) | Error::Capacity(_) => EXIT_USAGE,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Parameter(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    // A pool that is already set up (e.g. by a previous call in the same
    // process) is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.exit_code() {
                0 => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let echo: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = configure_threads().and_then(|_| commands::dispatch(cli.command, &echo));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
