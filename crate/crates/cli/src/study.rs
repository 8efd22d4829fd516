use std::path::PathBuf;

use clap::Args;
use qid_core::study::{run_study_timed, StudyConfig};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_text};
use crate::{output_dir, EstimatorArgs};

#[derive(Args, Debug)]
pub struct StudyArgs {
    /// Study configuration (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Report directory. Falls back to the config's `outputs`, then
    /// $QID_OUTPUT_DIR, then ./qid-output.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    n_runs: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Fit the EM baseline as well.
    #[arg(long)]
    run_em: bool,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

pub fn run(args: StudyArgs) -> CliResult<()> {
    let mut cfg: StudyConfig = read_json(&args.config)?;
    if let Some(n) = args.n_runs {
        cfg.n_runs = n;
    }
    if let Some(s) = args.base_seed {
        cfg.base_seed = s;
    }
    if let Some(v) = args.n_values {
        cfg.n_values = v;
    }
    if args.run_em {
        cfg.run_em = true;
    }
    args.estimator.apply(&mut cfg.estimator);

    let dir = output_dir(args.out.or_else(|| cfg.outputs.clone().map(PathBuf::from)));
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let (report, times) = run_study_timed(&cfg, workers)?;
    report.write_to(&dir).map_err(CliError::io(dir.clone()))?;

    let mut timings = String::new();
    for (r, t) in report.records.iter().zip(&times) {
        timings.push_str(&json!({"n": r.n, "run_id": r.run_id, "wall_time": t}).to_string());
        timings.push('\n');
    }
    write_text(&dir.join("timings.ndjson"), &timings)?;

    let failed: usize = report.summary.per_n.iter().map(|s| s.failed_runs).sum();
    println!(
        "{}",
        json!({
            "report": dir,
            "records": report.records.len(),
            "failed_runs": failed,
            "wall_time": times.iter().sum::<f64>(),
        })
    );
    Ok(())
}
