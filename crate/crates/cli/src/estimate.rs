use std::path::PathBuf;

use clap::Args;
use qid_core::em::{em_fit, EmConfig};
use qid_core::kernel::bandwidth_rule;
use qid_core::mixture::{default_x_grid, estimate_mixture, MixtureConfig};
use qid_core::spectral::{full_pipeline, PipelineConfig};
use qid_core::UniformGrid;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::{read_json, read_sample, write_text};
use crate::{output_dir, EstimatorArgs};

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Sample file, one real value per line.
    input: PathBuf,
    /// Estimator settings (JSON); flags override individual keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Seed recorded in the output, for provenance only.
    #[arg(long)]
    seed: Option<u64>,
    /// Also estimate the contaminant density and write curves to --out.
    #[arg(long)]
    mixture: bool,
    /// Use this p instead of the estimate when decontaminating.
    #[arg(long)]
    oracle_p: Option<f64>,
    /// Use this sigma2 instead of the estimate when decontaminating.
    #[arg(long)]
    oracle_sigma2: Option<f64>,
    /// Also fit the two-normal EM baseline.
    #[arg(long)]
    em: bool,
    /// Directory for curve files.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

const MIN_VALUES: usize = 10;

pub fn run(args: EstimateArgs) -> CliResult<()> {
    let mut sample = read_sample(&args.input)?;
    if sample.len() < MIN_VALUES {
        return Err(CliError::Usage(format!(
            "{} holds {} values; at least {MIN_VALUES} are needed",
            args.input.display(),
            sample.len()
        )));
    }
    sample = sample.with_provenance(args.seed, None);
    let mut cfg: PipelineConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => PipelineConfig::default(),
    };
    args.estimator.apply(&mut cfg);

    let mcfg = MixtureConfig::default();
    let h = bandwidth_rule(sample.len(), mcfg.bandwidth_c)?;
    let x_grid = default_x_grid(&sample, h)?;
    let out = full_pipeline(&sample, &cfg, x_grid)?;
    let mut doc = json!({ "triplet": out.triplet });

    if args.em {
        doc["em"] = match em_fit(&sample, &EmConfig::default()) {
            Ok(r) => json!(r),
            Err(e) => error_value(&e),
        };
    }

    if args.mixture {
        let dir = output_dir(args.out);
        let p = args.oracle_p.unwrap_or(out.triplet.p_hat);
        let s2 = args.oracle_sigma2.unwrap_or(out.triplet.sigma2);
        doc["mixture"] = match estimate_mixture(&sample, p, s2, &mcfg, x_grid) {
            Ok(m) => {
                let files = [
                    ("g_hat", "g_hat.csv", m.g_hat.to_csv()),
                    ("g_circ_plus", "g_circ_plus.csv", m.g_circ_plus.to_csv()),
                    ("s", "s.csv", out.s.to_csv()),
                ];
                let mut paths = serde_json::Map::new();
                for (key, name, text) in files {
                    let path = dir.join(name);
                    write_text(&path, &text)?;
                    paths.insert(key.into(), json!(path));
                }
                json!({
                    "p_hat": m.p_hat,
                    "sigma2_hat": m.sigma2_hat,
                    "h": m.h,
                    "oracle_parameters": args.oracle_p.is_some() || args.oracle_sigma2.is_some(),
                    "x_grid": grid_value(&x_grid),
                    "files": paths,
                })
            }
            Err(e) => error_value(&e),
        };
    }
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(())
}

fn error_value(e: &qid_core::QidError) -> Value {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } })
}

fn grid_value(g: &UniformGrid) -> Value {
    json!({ "start": g.start(), "stop": g.stop(), "count": g.count() })
}
