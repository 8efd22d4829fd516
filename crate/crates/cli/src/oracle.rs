use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qid_core::charfn::exact_cf;
use qid_core::models::{
    exact_density, exact_g_circ, exact_triplet, nu_tilde_density, sample_model, NuTildeSeriesConfig,
};
use qid_core::study::default_density_grid;
use qid_core::{ModelSpec, QidError, UniformGrid};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_text};
use crate::output_dir;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    TwoNormal,
    BartSimpson,
    Student,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Model as JSON, e.g. {"variant":"TwoNormalMixture","p":0.75,"sigma1_sq":0.1,"sigma2_sq":0.5}.
    #[arg(long, conflicts_with = "preset")]
    model: Option<PathBuf>,
    /// One of the built-in simulation models.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Characteristic function is written on [0, u_max].
    #[arg(long, default_value_t = 8.0)]
    u_max: f64,
    #[arg(long, default_value_t = 4097)]
    u_count: usize,
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long)]
    x_count: Option<usize>,
    /// Also draw a sample of this size and write it as sample.csv.
    #[arg(long)]
    sample_n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn run(args: OracleArgs) -> CliResult<()> {
    let model: ModelSpec = match (&args.model, args.preset) {
        (Some(p), _) => read_json(p)?,
        (None, Some(Preset::TwoNormal)) => ModelSpec::two_normal_benchmark(),
        (None, Some(Preset::BartSimpson)) => ModelSpec::bart_simpson_benchmark(),
        (None, Some(Preset::Student)) => ModelSpec::student_benchmark(),
        (None, None) => return Err(CliError::Usage("give --model or --preset".into())),
    };
    model.validate()?;
    let dir = output_dir(args.out);

    let default_x = default_density_grid(&model)?;
    let x_grid = UniformGrid::new(
        args.x_min.unwrap_or(default_x.start()),
        args.x_max.unwrap_or(default_x.stop()),
        args.x_count.unwrap_or(default_x.count()),
    )?;
    let u_grid = UniformGrid::new(0.0, args.u_max, args.u_count)?;

    let mut written = vec![];
    let mut put = |name: &str, text: String| -> CliResult<()> {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };
    put("cf.csv", exact_cf(&model, u_grid)?.to_csv())?;
    put("density.csv", exact_density(&model, x_grid)?.to_csv())?;
    if model.is_mixture() {
        put("g_circ.csv", exact_g_circ(&model, x_grid)?.to_csv())?;
    }
    let mut notes = vec![];
    match nu_tilde_density(&model, x_grid, NuTildeSeriesConfig::default()) {
        Ok(c) => put("nu_tilde.csv", c.to_csv())?,
        Err(e @ (QidError::UnsupportedModel(_) | QidError::SeriesNotConverged { .. })) => {
            notes.push(json!({ "nu_tilde": e.to_string() }))
        }
        Err(e) => return Err(e.into()),
    }
    let triplet = exact_triplet(&model)?;
    put(
        "triplet.json",
        serde_json::to_string_pretty(&json!({ "model": model, "triplet": triplet })).expect("json"),
    )?;
    if let Some(n) = args.sample_n {
        put("sample.csv", sample_model(&model, n, args.seed)?.to_csv())?;
    }
    println!(
        "{}",
        json!({ "written": written, "notes": notes, "triplet": triplet })
    );
    Ok(())
}
