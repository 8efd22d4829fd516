//! `qid`: Monte Carlo studies, estimation on data files, plots and oracle
//! curves for normal-plus-contaminant mixtures.

mod error;
mod estimate;
mod io;
mod oracle;
mod plot;
mod study;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qid_core::spectral::PipelineConfig;
use qid_core::weights::WeightKind;

use crate::error::CliResult;

/// Default output directory when `--out` is not given.
pub const OUTPUT_ENV: &str = "QID_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "qid",
    version,
    about = "Spectral estimation for Gaussian contamination mixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a seeded Monte Carlo study described by a JSON config.
    Study(study::StudyArgs),
    /// Estimate the triplet (and optionally the contaminant density) of a
    /// sample file with one value per line.
    Estimate(estimate::EstimateArgs),
    /// Draw figures from a stored study report.
    Plot(plot::PlotArgs),
    /// Write exact characteristic function, densities and jump density of a model.
    Oracle(oracle::OracleArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum WeightArg {
    Indicator,
    SmoothBump,
}

/// Estimator overrides shared by subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct EstimatorArgs {
    /// Upper end of the band used for sigma2 and lambda*.
    #[arg(long = "u")]
    u: Option<f64>,
    /// Upper end of the band used for gamma*.
    #[arg(long = "v")]
    v: Option<f64>,
    /// Inversion cutoff for the jump density (defaults to U).
    #[arg(long = "t")]
    t: Option<f64>,
    /// Lower band edge as a fraction of U and V.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    weight_kind: Option<WeightArg>,
    /// Frequency grid nodes on [0, max(U, V, T)].
    #[arg(long)]
    grid_count: Option<usize>,
}

impl EstimatorArgs {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(u) = self.u {
            cfg.u = u;
        }
        if let Some(v) = self.v {
            cfg.v = v;
        }
        if self.t.is_some() {
            cfg.t = self.t;
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(k) = self.weight_kind {
            cfg.weight_kind = match k {
                WeightArg::Indicator => WeightKind::Indicator,
                WeightArg::SmoothBump => WeightKind::SmoothBump,
            };
        }
        if let Some(c) = self.grid_count {
            cfg.grid_count = c;
        }
    }
}

/// `--out`, then the environment, then `./qid-output`.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qid-output"))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Study(a) => study::run(a),
        Command::Estimate(a) => estimate::run(a),
        Command::Plot(a) => plot::run(a),
        Command::Oracle(a) => oracle::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
