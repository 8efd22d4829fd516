//! Static figures from stored study reports, each with the CSV it was drawn from.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use plotters::prelude::*;
use qid_core::charfn::{ecf_on_grid, exact_cf};
use qid_core::curve::DensityCurve;
use qid_core::mixture::{estimate_mixture, MixtureConfig};
use qid_core::models::{exact_g_circ, sample_model};
use qid_core::study::{Quantiles, RunRecord, StudyReport};
use qid_core::UniformGrid;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::write_text;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Boxplot,
    DensityOverlay,
    CfOverlay,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    PHat,
    Sigma2,
    LambdaStar,
    GammaStar,
    L2GCirc,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Directory written by `qid study`.
    #[arg(long, short)]
    report: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Quantity shown by the boxplot.
    #[arg(long, value_enum, default_value_t = Metric::PHat)]
    metric: Metric,
    /// Number of ECF realizations in the cf overlay.
    #[arg(long, default_value_t = 20)]
    realizations: usize,
    /// Figure directory; defaults to `<report>/figures`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

const SIZE: (u32, u32) = (800, 520);

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

pub fn run(args: PlotArgs) -> CliResult<()> {
    let report = StudyReport::read_from(&args.report).map_err(|e| {
        CliError::Usage(format!(
            "cannot read report in {}: {e}",
            args.report.display()
        ))
    })?;
    if report.records.is_empty() {
        return Err(CliError::EmptyReport(args.report));
    }
    let dir = args.out.unwrap_or_else(|| args.report.join("figures"));
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let files = match args.kind {
        PlotKind::Boxplot => boxplot(&report, args.metric, &dir)?,
        PlotKind::DensityOverlay => density_overlay(&report, &dir)?,
        PlotKind::CfOverlay => cf_overlay(&report, args.realizations, &dir)?,
    };
    println!("{}", json!({ "written": files }));
    Ok(())
}

fn metric_value(r: &RunRecord, m: Metric) -> Option<f64> {
    let t = r.triplet?;
    Some(match m {
        Metric::PHat => t.p_hat,
        Metric::Sigma2 => t.sigma2,
        Metric::LambdaStar => t.lambda_star,
        Metric::GammaStar => t.gamma_star,
        Metric::L2GCirc => r.l2_g_circ?,
    })
}

fn em_value(r: &RunRecord, m: Metric) -> Option<f64> {
    let e = r.em_result.as_ref()?;
    match m {
        Metric::PHat => Some(e.p_hat),
        Metric::Sigma2 => Some(e.sigma1_sq_hat),
        _ => None,
    }
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::PHat => "p_hat",
        Metric::Sigma2 => "sigma2",
        Metric::LambdaStar => "lambda_star",
        Metric::GammaStar => "gamma_star",
        Metric::L2GCirc => "l2_g_circ",
    }
}

/// One box per `n`, plus one per `n` for EM where the report has it.
fn boxplot(report: &StudyReport, metric: Metric, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let name = metric_name(metric);
    let mut groups: Vec<(String, Vec<f64>)> = vec![];
    for &n in &report.summary.config.n_values {
        let recs: Vec<&RunRecord> = report.records.iter().filter(|r| r.n == n).collect();
        let spectral: Vec<f64> = recs
            .iter()
            .filter_map(|r| metric_value(r, metric))
            .collect();
        groups.push((format!("{n} spectral"), spectral));
        let em: Vec<f64> = recs.iter().filter_map(|r| em_value(r, metric)).collect();
        if !em.is_empty() {
            groups.push((format!("{n} EM"), em));
        }
    }
    groups.retain(|(_, v)| !v.is_empty());
    if groups.is_empty() {
        return Err(CliError::Plot(format!(
            "no finite values of {name} in the report"
        )));
    }

    let mut csv = String::from("group,count,min,q25,median,q75,max\n");
    for (label, v) in &groups {
        if let Some(q) = Quantiles::of(v) {
            csv.push_str(&format!(
                "{label},{},{:?},{:?},{:?},{:?},{:?}\n",
                q.count, q.min, q.q25, q.median, q.q75, q.max
            ));
        }
    }
    let csv_path = dir.join(format!("boxplot_{name}.csv"));
    write_text(&csv_path, &csv)?;

    let all = groups.iter().flat_map(|(_, v)| v.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let pad = 0.05 * (hi - lo).max(1e-9);
    let labels: Vec<String> = groups.iter().map(|(l, _)| l.clone()).collect();
    let svg_path = dir.join(format!("boxplot_{name}.svg"));
    {
        let root = SVGBackend::new(&svg_path, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("{name} by sample size"), ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(
                labels[..].into_segmented(),
                (lo - pad) as f32..(hi + pad) as f32,
            )
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .y_desc(name)
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(groups.iter().zip(&labels).map(|((_, v), label)| {
                let colour = if label.ends_with("EM") { BLUE } else { GREEN };
                Boxplot::new_vertical(
                    SegmentValue::CenterOf(label),
                    &plotters::data::Quartiles::new(v),
                )
                .width(24)
                .style(colour)
            }))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(vec![svg_path, csv_path])
}

/// First successful run for `n`.
fn first_ok(report: &StudyReport, n: usize) -> Option<&RunRecord> {
    report
        .records
        .iter()
        .find(|r| r.n == n && r.triplet.is_some())
}

fn density_overlay(report: &StudyReport, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = &report.summary.config;
    let x_grid = cfg.density_grid()?;
    let truth = exact_g_circ(&cfg.model, x_grid)?;
    let mcfg = MixtureConfig {
        bandwidth_c: cfg.bandwidth_c,
        ..Default::default()
    };
    let mut files = vec![];
    for &n in &cfg.n_values {
        let Some(rec) = first_ok(report, n) else {
            continue;
        };
        let t = rec.triplet.expect("filtered");
        let sample = sample_model(&cfg.model, n, rec.seed)?;
        let est = estimate_mixture(&sample, t.p_hat, t.sigma2, &mcfg, x_grid)?;
        let stem = format!("density_overlay_n{n}");
        let mut csv = String::from("x,estimate,exact\n");
        for (j, x) in x_grid.nodes().enumerate() {
            csv.push_str(&format!(
                "{x:?},{:?},{:?}\n",
                est.g_circ_plus.values[j], truth.values[j]
            ));
        }
        let csv_path = dir.join(format!("{stem}.csv"));
        write_text(&csv_path, &csv)?;
        let svg_path = dir.join(format!("{stem}.svg"));
        line_chart(
            &svg_path,
            &format!("contaminant density, n = {n}, run {}", rec.run_id),
            x_grid,
            &[
                ("estimate", &est.g_circ_plus, GREEN),
                ("exact", &truth, BLACK),
            ],
        )?;
        files.push(svg_path);
        files.push(csv_path);
    }
    if files.is_empty() {
        return Err(CliError::Plot("no successful runs to overlay".into()));
    }
    Ok(files)
}

fn line_chart(
    path: &Path,
    title: &str,
    x_grid: UniformGrid,
    curves: &[(&str, &DensityCurve, RGBColor)],
) -> CliResult<()> {
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for (_, c, _) in curves {
        for v in &c.values {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    let pad = 0.05 * (hi - lo).max(1e-9);
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x_grid.start()..x_grid.stop(), (lo - pad)..(hi + pad))
        .map_err(plot_err)?;
    chart.configure_mesh().draw().map_err(plot_err)?;
    for (label, c, colour) in curves {
        let colour = *colour;
        chart
            .draw_series(LineSeries::new(
                x_grid.nodes().zip(c.values.iter().copied()),
                colour.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label(*label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE)
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Real parts of several ECF realizations at the smallest `n` against the
/// exact characteristic function.
fn cf_overlay(report: &StudyReport, count: usize, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = &report.summary.config;
    let n = *cfg.n_values.iter().min().expect("validated config");
    let u_grid = UniformGrid::new(0.0, cfg.estimator.u.max(cfg.estimator.v), 801)?;
    let exact = exact_cf(&cfg.model, u_grid)?;
    let runs: Vec<&RunRecord> = report
        .records
        .iter()
        .filter(|r| r.n == n)
        .take(count)
        .collect();
    let mut ecfs = vec![];
    for r in &runs {
        ecfs.push(ecf_on_grid(&sample_model(&cfg.model, n, r.seed)?, u_grid)?);
    }

    let mut csv = String::from("u,exact_re");
    for r in &runs {
        csv.push_str(&format!(",run{}_re", r.run_id));
    }
    csv.push('\n');
    for (k, u) in u_grid.nodes().enumerate() {
        csv.push_str(&format!("{u:?},{:?}", exact.values[k].re));
        for e in &ecfs {
            csv.push_str(&format!(",{:?}", e.values[k].re));
        }
        csv.push('\n');
    }
    let csv_path = dir.join("cf_overlay.csv");
    write_text(&csv_path, &csv)?;

    let svg_path = dir.join("cf_overlay.svg");
    let root = SVGBackend::new(&svg_path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let lo = ecfs
        .iter()
        .flat_map(|e| e.values.iter().map(|z| z.re))
        .fold(0.0f64, f64::min);
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("Re of {} ECF realizations, n = {n}", runs.len()),
            ("sans-serif", 20),
        )
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..u_grid.stop(), (lo - 0.05)..1.05)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("u")
        .draw()
        .map_err(plot_err)?;
    let faint = RGBColor(120, 170, 230);
    for e in &ecfs {
        chart
            .draw_series(LineSeries::new(
                u_grid.nodes().zip(e.values.iter().map(|z| z.re)),
                faint,
            ))
            .map_err(plot_err)?;
    }
    chart
        .draw_series(LineSeries::new(
            u_grid.nodes().zip(exact.values.iter().map(|z| z.re)),
            BLACK.stroke_width(2),
        ))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    drop(chart);
    drop(root);
    Ok(vec![svg_path, csv_path])
}
