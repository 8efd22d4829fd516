//! Seeded Monte Carlo studies over sample sizes and replications.
//!
//! Every run owns a seed derived from `(base_seed, n, run_id)` and fills its
//! own slot in the record vector, so reports do not depend on the number of
//! worker threads.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{em_fit, EmConfig, EmResult};
use crate::error::{QidError, Result};
use crate::grid::UniformGrid;
use crate::kernel::{bandwidth_rule, KernelSpec, DEFAULT_BANDWIDTH_C};
use crate::mixture::{decontaminate, kde, l2_distance, positive_part};
use crate::models::{
    exact_g_circ, exact_triplet, nu_tilde_density, sample_model, ModelSpec, NuTildeSeriesConfig,
};
use crate::spectral::{full_pipeline, PipelineConfig, TripletEstimate};

pub const RECORDS_FILE: &str = "records.ndjson";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DEFAULT_STUDY_X_COUNT: usize = 4001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: ModelSpec,
    pub n_values: Vec<usize>,
    pub n_runs: usize,
    #[serde(flatten)]
    pub estimator: PipelineConfig,
    #[serde(default = "default_bandwidth_c")]
    pub bandwidth_c: f64,
    #[serde(default)]
    pub base_seed: u64,
    /// Also fit the two-normal EM baseline on each sample.
    #[serde(default)]
    pub run_em: bool,
    #[serde(default)]
    pub em: EmConfig,
    /// Grid for the contaminant and jump densities; model-based when absent.
    #[serde(default)]
    pub x_grid: Option<UniformGrid>,
    /// Where the CLI writes the report. Not used by the computation.
    #[serde(default)]
    pub outputs: Option<String>,
}

fn default_bandwidth_c() -> f64 {
    DEFAULT_BANDWIDTH_C
}

impl StudyConfig {
    pub fn new(model: ModelSpec, n_values: Vec<usize>, n_runs: usize) -> Self {
        Self {
            model,
            n_values,
            n_runs,
            estimator: PipelineConfig::default(),
            bandwidth_c: DEFAULT_BANDWIDTH_C,
            base_seed: 0,
            run_em: false,
            em: EmConfig::default(),
            x_grid: None,
            outputs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.estimator.validate()?;
        self.em.validate()?;
        if self.n_runs < 1 {
            return Err(QidError::InvalidConfig("n_runs must be at least 1".into()));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|n| *n < 10) {
            return Err(QidError::InvalidConfig(
                "n_values must be non-empty with every n >= 10".into(),
            ));
        }
        if self.n_values.iter().any(|n| *n as u64 >= 1 << 32) || self.n_runs as u64 >= 1 << 32 {
            return Err(QidError::InvalidConfig(
                "n and n_runs must fit in 32 bits".into(),
            ));
        }
        if !(self.bandwidth_c > 0.0) {
            return Err(QidError::NonPositiveBandwidth(self.bandwidth_c));
        }
        Ok(())
    }

    pub fn density_grid(&self) -> Result<UniformGrid> {
        match self.x_grid {
            Some(g) => Ok(g),
            None => default_density_grid(&self.model),
        }
    }
}

/// Symmetric grid covering the effective support of `model`.
pub fn default_density_grid(model: &ModelSpec) -> Result<UniformGrid> {
    let half = match *model {
        ModelSpec::BartSimpsonModified { sigma1, sigma2, .. } => 1.0 + 8.0 * sigma1.max(sigma2),
        ModelSpec::StudentPlusNormalMixture { .. } => 8.0,
        _ => 8.0 * model.scale(),
    };
    UniformGrid::new(-half, half, DEFAULT_STUDY_X_COUNT)
}

/// SplitMix64 finalizer, a bijection on `u64`.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Distinct `(n, run_id)` pairs below `2^32` map to distinct seeds.
pub fn run_seed(base_seed: u64, n: usize, run_id: usize) -> u64 {
    mix(base_seed ^ mix(((n as u64) << 32) | run_id as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub run_id: usize,
    pub seed: u64,
    /// Set when the spectral pipeline failed; the run still counts.
    pub error: Option<String>,
    pub triplet: Option<TripletEstimate>,
    pub em_result: Option<EmResult>,
    pub em_error: Option<String>,
    pub mixture_error: Option<String>,
    /// `g_circ_plus` against the true contaminant density.
    pub l2_g_circ: Option<f64>,
    /// Same, before cutting at zero.
    pub l2_g_circ_signed: Option<f64>,
    /// With the true `p` and `sigma2` in place of the estimates.
    pub l2_g_circ_ablation: Option<f64>,
    pub l2_g_circ_signed_ablation: Option<f64>,
    /// Jump density against the series oracle, where it exists.
    pub l2_s: Option<f64>,
}

/// Model-level quantities shared by all runs.
struct Truth {
    p: f64,
    sigma2: f64,
    x_grid: UniformGrid,
    g_circ: Option<crate::curve::DensityCurve>,
    s: Option<crate::curve::DensityCurve>,
}

fn run_one(cfg: &StudyConfig, truth: &Truth, n: usize, run_id: usize) -> RunRecord {
    let seed = run_seed(cfg.base_seed, n, run_id);
    let mut rec = RunRecord {
        n,
        run_id,
        seed,
        error: None,
        triplet: None,
        em_result: None,
        em_error: None,
        mixture_error: None,
        l2_g_circ: None,
        l2_g_circ_signed: None,
        l2_g_circ_ablation: None,
        l2_g_circ_signed_ablation: None,
        l2_s: None,
    };
    let sample = match sample_model(&cfg.model, n, seed) {
        Ok(s) => s,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    if cfg.run_em {
        match em_fit(&sample, &cfg.em) {
            Ok(r) => rec.em_result = Some(r),
            Err(e) => rec.em_error = Some(e.to_string()),
        }
    }

    // The ablation branch needs only the sample, so it runs even when the
    // spectral step fails.
    let g_hat = bandwidth_rule(n, cfg.bandwidth_c)
        .and_then(|h| kde(&sample, KernelSpec::default(), h, truth.x_grid));
    if let (Ok(g_hat), Some(target)) = (&g_hat, &truth.g_circ) {
        if let Ok(signed) = decontaminate(g_hat, truth.p, truth.sigma2) {
            rec.l2_g_circ_signed_ablation = l2_distance(&signed, target).ok();
            rec.l2_g_circ_ablation = l2_distance(&positive_part(&signed), target).ok();
        }
    }

    let out = match full_pipeline(&sample, &cfg.estimator, truth.x_grid) {
        Ok(o) => o,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    if let Some(s_true) = &truth.s {
        rec.l2_s = l2_distance(&out.s, s_true).ok();
    }
    let triplet = out.triplet;
    rec.triplet = Some(triplet);
    match (g_hat, &truth.g_circ) {
        (Err(e), _) => rec.mixture_error = Some(e.to_string()),
        (Ok(g_hat), Some(target)) => match decontaminate(&g_hat, triplet.p_hat, triplet.sigma2) {
            Ok(signed) => {
                rec.l2_g_circ_signed = l2_distance(&signed, target).ok();
                rec.l2_g_circ = l2_distance(&positive_part(&signed), target).ok();
            }
            Err(e) => rec.mixture_error = Some(e.to_string()),
        },
        (Ok(_), None) => {}
    }
    rec
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            count: v.len(),
            min: v[0],
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Per-`n` quantiles of the error metrics that are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub runs: usize,
    pub failed_runs: usize,
    pub metrics: std::collections::BTreeMap<String, Quantiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub config: StudyConfig,
    pub true_p: f64,
    pub true_sigma2: f64,
    pub true_lambda_star: f64,
    pub per_n: Vec<NSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub records: Vec<RunRecord>,
    pub summary: StudySummary,
}

/// Metric name and extractor pairs summarized per `n`.
type Metric = (&'static str, fn(&RunRecord, f64, f64) -> Option<f64>);

const METRICS: [Metric; 12] = [
    ("abs_err_p", |r, p, _| {
        r.triplet.map(|t| (t.p_hat - p).abs())
    }),
    ("abs_err_sigma2", |r, _, s| {
        r.triplet.map(|t| (t.sigma2 - s).abs())
    }),
    ("abs_err_lambda_star", |r, p, _| {
        r.triplet.map(|t| (t.lambda_star + p.ln()).abs())
    }),
    ("abs_err_gamma_star", |r, _, _| {
        r.triplet.map(|t| t.gamma_star.abs())
    }),
    ("p_hat", |r, _, _| r.triplet.map(|t| t.p_hat)),
    ("sigma2", |r, _, _| r.triplet.map(|t| t.sigma2)),
    ("l2_g_circ", |r, _, _| r.l2_g_circ),
    ("l2_g_circ_ablation", |r, _, _| r.l2_g_circ_ablation),
    ("l2_ratio_full_over_ablation", |r, _, _| {
        Some(r.l2_g_circ? / r.l2_g_circ_ablation?)
    }),
    ("l2_s", |r, _, _| r.l2_s),
    ("em_abs_err_p", |r, p, _| {
        r.em_result.as_ref().map(|e| (e.p_hat - p).abs())
    }),
    ("em_abs_err_sigma2", |r, _, s| {
        r.em_result.as_ref().map(|e| (e.sigma1_sq_hat - s).abs())
    }),
];

/// Recomputes the per-`n` summary from records.
pub fn summarize(config: &StudyConfig, records: &[RunRecord]) -> Result<StudySummary> {
    let truth = exact_triplet(&config.model)?;
    let per_n = config
        .n_values
        .iter()
        .map(|&n| {
            let recs: Vec<&RunRecord> = records.iter().filter(|r| r.n == n).collect();
            let mut metrics = std::collections::BTreeMap::new();
            for (name, f) in METRICS {
                let vals: Vec<f64> = recs
                    .iter()
                    .filter_map(|r| f(r, truth.p, truth.sigma2))
                    .collect();
                if let Some(q) = Quantiles::of(&vals) {
                    metrics.insert(name.to_string(), q);
                }
            }
            NSummary {
                n,
                runs: recs.len(),
                failed_runs: recs.iter().filter(|r| r.error.is_some()).count(),
                metrics,
            }
        })
        .collect();
    Ok(StudySummary {
        config: config.clone(),
        true_p: truth.p,
        true_sigma2: truth.sigma2,
        true_lambda_star: truth.lambda_star,
        per_n,
    })
}

/// Runs every `(n, run_id)` pair on a pool of `workers` threads.
pub fn run_study(config: &StudyConfig, workers: usize) -> Result<StudyReport> {
    run_study_timed(config, workers).map(|(report, _)| report)
}

/// Like [`run_study`], also returning the wall time of each run in seconds,
/// in record order. Timings are kept out of the report so that reports stay
/// reproducible byte for byte.
pub fn run_study_timed(config: &StudyConfig, workers: usize) -> Result<(StudyReport, Vec<f64>)> {
    config.validate()?;
    let exact = exact_triplet(&config.model)?;
    let x_grid = config.density_grid()?;
    let g_circ = if config.model.is_mixture() {
        Some(exact_g_circ(&config.model, x_grid)?)
    } else {
        None
    };
    let s = match nu_tilde_density(&config.model, x_grid, NuTildeSeriesConfig::default()) {
        Ok(c) => Some(c),
        Err(QidError::UnsupportedModel(_)) | Err(QidError::SeriesNotConverged { .. }) => None,
        Err(e) => return Err(e),
    };
    let truth = Truth {
        p: exact.p,
        sigma2: exact.sigma2,
        x_grid,
        g_circ,
        s,
    };
    let jobs: Vec<(usize, usize)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.n_runs).map(move |r| (n, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| QidError::InvalidConfig(format!("thread pool: {e}")))?;
    let (records, times): (Vec<RunRecord>, Vec<f64>) = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, r)| {
                let start = std::time::Instant::now();
                let rec = run_one(config, &truth, n, r);
                (rec, start.elapsed().as_secs_f64())
            })
            .unzip()
    });
    let summary = summarize(config, &records)?;
    Ok((StudyReport { records, summary }, times))
}

impl StudyReport {
    /// One JSON object per line, in run order.
    pub fn records_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::File::create(dir.join(RECORDS_FILE))?
            .write_all(self.records_ndjson().as_bytes())?;
        std::fs::File::create(dir.join(SUMMARY_FILE))?.write_all(self.summary_json().as_bytes())?;
        Ok(())
    }

    pub fn read_from(dir: &Path) -> std::result::Result<Self, Box<dyn std::error::Error>> {
        let records = std::fs::read_to_string(dir.join(RECORDS_FILE))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<RunRecord>, _>>()?;
        let summary = serde_json::from_str(&std::fs::read_to_string(dir.join(SUMMARY_FILE))?)?;
        Ok(Self { records, summary })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> StudyConfig {
        let mut c = StudyConfig::new(ModelSpec::two_normal_benchmark(), vec![200, 400], 3);
        c.estimator.grid_count = 1025;
        c.run_em = true;
        c.base_seed = 42;
        c
    }

    #[test]
    fn seeds_distinct() {
        let mut seen = std::collections::HashSet::new();
        for n in [10, 1000, 5000, 10_000, 100_000] {
            for r in 0..200 {
                assert!(seen.insert(run_seed(7, n, r)));
            }
        }
        assert_ne!(run_seed(1, 1000, 0), run_seed(2, 1000, 0));
    }

    #[test]
    fn mix_is_bijective_on_sample() {
        let mut v: Vec<u64> = (0..10_000u64).map(|i| mix(i << 40)).collect();
        v.sort();
        v.dedup();
        assert_eq!(v.len(), 10_000);
    }

    #[test]
    fn quantiles_of_known_data() {
        let q = Quantiles::of(&[4.0, 1.0, 3.0, 2.0, f64::NAN]).unwrap();
        assert_eq!(q.count, 4);
        assert_eq!((q.min, q.max), (1.0, 4.0));
        assert_eq!(q.median, 2.5);
        assert_eq!(q.q25, 1.75);
        assert!(Quantiles::of(&[]).is_none());
    }

    #[test]
    fn record_layout() {
        let cfg = small_config();
        let rep = run_study(&cfg, 2).unwrap();
        assert_eq!(rep.records.len(), 6);
        for (i, r) in rep.records.iter().enumerate() {
            assert_eq!(r.n, cfg.n_values[i / 3]);
            assert_eq!(r.run_id, i % 3);
            assert_eq!(r.seed, run_seed(42, r.n, r.run_id));
            let t = r.triplet.expect("pipeline ran");
            assert!(t.p_hat > 0.0 && t.p_hat <= 1.0);
            assert!(r.em_result.is_some());
            assert!(r.l2_g_circ_ablation.unwrap().is_finite());
        }
    }

    #[test]
    fn worker_count_does_not_matter() {
        let cfg = small_config();
        let a = run_study(&cfg, 1).unwrap();
        let b = run_study(&cfg, 3).unwrap();
        assert_eq!(a.records_ndjson(), b.records_ndjson());
        assert_eq!(a.summary_json(), b.summary_json());
    }

    #[test]
    fn summary_recomputes() {
        let cfg = small_config();
        let rep = run_study(&cfg, 1).unwrap();
        assert_eq!(summarize(&cfg, &rep.records).unwrap(), rep.summary);
    }

    #[test]
    fn failures_are_recorded() {
        // a huge U drives the modulus through the floor
        let mut cfg = StudyConfig::new(ModelSpec::PureNormal { sigma_sq: 1.0 }, vec![50], 2);
        cfg.estimator.u = 40.0;
        cfg.estimator.v = 40.0;
        cfg.estimator.grid_count = 2049;
        cfg.estimator.modulus_floor = 0.05;
        let rep = run_study(&cfg, 1).unwrap();
        assert_eq!(rep.records.len(), 2);
        assert!(rep
            .records
            .iter()
            .all(|r| r.error.is_some() && r.triplet.is_none()));
        assert_eq!(rep.summary.per_n[0].failed_runs, 2);
    }

    #[test]
    fn round_trip_files() {
        let cfg = small_config();
        let rep = run_study(&cfg, 1).unwrap();
        let dir = std::env::temp_dir().join(format!("qid-study-{}", std::process::id()));
        rep.write_to(&dir).unwrap();
        let back = StudyReport::read_from(&dir).unwrap();
        assert_eq!(back.records_ndjson(), rep.records_ndjson());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = small_config();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: StudyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let minimal: StudyConfig = serde_json::from_str(
            r#"{"model":{"variant":"TwoNormalMixture","p":0.75,"sigma1_sq":0.1,"sigma2_sq":0.5},
                "n_values":[1000],"n_runs":1,"U":6}"#,
        )
        .unwrap();
        assert_eq!(minimal.estimator.u, 6.0);
        assert_eq!(minimal.estimator.v, 8.0);
        assert!(!minimal.run_em);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = small_config();
        c.n_runs = 0;
        assert!(run_study(&c, 1).is_err());
        let mut c = small_config();
        c.n_values = vec![5];
        assert!(run_study(&c, 1).is_err());
    }
}
