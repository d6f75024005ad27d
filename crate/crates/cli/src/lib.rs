//! Batch runner for the bound, CLT, k-NN and Langevin pipelines.
//!
//! Each invocation runs one pipeline from a config file and writes
//! `results.csv`, `report.json` and `summary.txt` into the output directory,
//! or `error.json` on failure.

pub mod config;
pub mod output;
pub mod pipelines;
pub mod plot;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use steincert_core::rng::DEFAULT_SEED;

pub use config::ExperimentConfig;

/// Version string embedded in every report.
pub const CODE_VERSION: &str = concat!("steincert ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("io: {0}")]
    Io(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{field}: {reason}")]
    Validation { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] steincert_core::Error),

    #[error("csv: {0}")]
    Csv(String),

    #[error("plot data: {0}")]
    Plot(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 2 for anything rejected before sampling, 1 for pipeline failures.
    pub fn exit_code(&self) -> i32 {
        use steincert_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Validation { .. } => 2,
            CliError::Core(E::InvalidArgument { .. } | E::DimensionMismatch { .. }) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Config(_) => "config",
            CliError::Validation { .. } => "validation",
            CliError::Core(_) => "pipeline",
            CliError::Csv(_) => "csv",
            CliError::Plot(_) => "plot_data",
        }
    }

    pub fn field(&self) -> Option<String> {
        match self {
            CliError::Validation { field, .. } => Some(field.clone()),
            CliError::Core(steincert_core::Error::InvalidArgument { name, .. }) => Some(name.to_string()),
            _ => None,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "steincert", version, about = "Seeded runs of the bound, CLT, k-NN and Langevin pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML or JSON config; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Pipeline {
    Bound,
    Clt,
    Knn,
    Lmc,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Bound => "bound",
            Pipeline::Clt => "clt",
            Pipeline::Knn => "knn",
            Pipeline::Lmc => "lmc",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stein bound on a pair sampler.
    Bound,
    /// Empirical CLT rate against the rate expression.
    Clt,
    /// Stationary measure of k-NN random walks.
    Knn,
    /// Langevin chain moments, contraction and complexity.
    Lmc,
    /// Turn a results file into plot-ready series.
    Plotdata {
        #[arg(long)]
        input: PathBuf,
        /// rate_loglog, bound_decomposition or chain_trace.
        #[arg(long)]
        kind: String,
    },
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pipeline = match &cli.command {
        Command::Bound => Pipeline::Bound,
        Command::Clt => Pipeline::Clt,
        Command::Knn => Pipeline::Knn,
        Command::Lmc => Pipeline::Lmc,
        Command::Plotdata { input, kind } => {
            return match plot::emit_plot_data(input, kind, &cli.out) {
                Ok(path) => {
                    let _ = writeln!(std::io::stdout(), "wrote {}", path.display());
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            };
        }
    };
    match run(pipeline, &cli) {
        Ok(summary) => {
            // a closed pipe on stdout is not a failure of the run
            let mut out = std::io::stdout().lock();
            for line in summary {
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Err(io) = output::write_error(&cli.out, pipeline.name(), &e) {
                eprintln!("error: could not write the error record: {io}");
            }
            e.exit_code()
        }
    }
}

fn run(pipeline: Pipeline, cli: &Cli) -> Result<Vec<String>> {
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    if cli.threads == Some(0) {
        return Err(CliError::Validation {
            field: "--threads".into(),
            reason: "must be >= 1".into(),
        });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    pipelines::validate(pipeline, &cfg)?;
    let out = pool.install(|| pipelines::run_pipeline(pipeline, &cfg, seed))?;
    output::write_outputs(&cli.out, pipeline.name(), seed, &cfg, &out)?;
    Ok(out.summary)
}
