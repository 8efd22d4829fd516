use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qid"))
        .args(args)
        .env_remove("QID_OUTPUT_DIR")
        .output()
        .expect("qid runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "qid failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_STUDY: &str = r#"{
  "model": {"variant": "TwoNormalMixture", "p": 0.75, "sigma1_sq": 0.1, "sigma2_sq": 0.5},
  "n_values": [1000, 2000],
  "n_runs": 3,
  "U": 8,
  "V": 8,
  "base_seed": 42,
  "run_em": true
}"#;

fn run_small_study(tmp: &Path, name: &str, workers: &str) -> std::path::PathBuf {
    let cfg = write_config(tmp, SMALL_STUDY);
    let out = tmp.join(name);
    let res = qid(&[
        "study",
        "-c",
        &cfg,
        "-o",
        out.to_str().unwrap(),
        "--workers",
        workers,
    ]);
    let status = stdout_json(&res);
    assert_eq!(status["records"], 6);
    out
}

#[test]
fn study_reports_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_small_study(tmp.path(), "a", "1");
    let b = run_small_study(tmp.path(), "b", "8");
    let c = run_small_study(tmp.path(), "c", "1");
    for f in ["records.ndjson", "summary.json"] {
        let fa = std::fs::read(a.join(f)).unwrap();
        assert_eq!(
            fa,
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs across workers"
        );
        assert_eq!(
            fa,
            std::fs::read(c.join(f)).unwrap(),
            "{f} differs across invocations"
        );
    }
    assert!(a.join("timings.ndjson").exists());
}

#[test]
fn estimate_on_constant_data_gives_degenerate_triplet() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("zeros.csv");
    std::fs::write(&input, "0\n".repeat(10_000)).unwrap();
    let v = stdout_json(&qid(&["estimate", input.to_str().unwrap()]));
    let t = &v["triplet"];
    for key in ["gamma_star", "sigma2", "lambda_star"] {
        assert!(t[key].as_f64().unwrap().abs() < 1e-9, "{key} = {}", t[key]);
    }
    assert_eq!(t["p_hat"].as_f64().unwrap(), 1.0);
    assert_eq!(t["n"], 10_000);
}

#[test]
fn malformed_line_is_a_parse_error_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.csv");
    let mut text = "0.5\n".repeat(20);
    text.push_str("abc\n");
    std::fs::write(&input, text).unwrap();
    let err = stderr_json(&qid(&["estimate", input.to_str().unwrap()]));
    assert_eq!(err["error"]["kind"], "ParseError");
    assert_eq!(err["error"]["line"], 21);
}

#[test]
fn too_few_values_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("short.csv");
    std::fs::write(&input, "1\n2\n3\n").unwrap();
    let err = stderr_json(&qid(&["estimate", input.to_str().unwrap()]));
    assert_eq!(err["error"]["kind"], "Usage");
}

#[test]
fn estimate_on_exported_sample_matches_study_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "model": {"variant": "TwoNormalMixture", "p": 0.75, "sigma1_sq": 0.1, "sigma2_sq": 0.5},
  "n_values": [10000],
  "n_runs": 1,
  "U": 8,
  "V": 8,
  "base_seed": 9
}"#,
    );
    let report = tmp.path().join("report");
    stdout_json(&qid(&["study", "-c", &cfg, "-o", report.to_str().unwrap()]));
    let records = std::fs::read_to_string(report.join("records.ndjson")).unwrap();
    let record: Value = serde_json::from_str(records.lines().next().unwrap()).unwrap();
    let seed = record["seed"].as_u64().unwrap().to_string();

    let oracle_dir = tmp.path().join("oracle");
    stdout_json(&qid(&[
        "oracle",
        "--preset",
        "two-normal",
        "--sample-n",
        "10000",
        "--seed",
        &seed,
        "-o",
        oracle_dir.to_str().unwrap(),
    ]));
    let sample = oracle_dir.join("sample.csv");
    let v = stdout_json(&qid(&[
        "estimate",
        sample.to_str().unwrap(),
        "--seed",
        &seed,
    ]));
    assert_eq!(v["triplet"], record["triplet"]);
}

#[test]
fn estimate_with_mixture_and_em_writes_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let oracle_dir = tmp.path().join("oracle");
    stdout_json(&qid(&[
        "oracle",
        "--preset",
        "two-normal",
        "--sample-n",
        "5000",
        "--seed",
        "3",
        "-o",
        oracle_dir.to_str().unwrap(),
    ]));
    for f in [
        "cf.csv",
        "density.csv",
        "g_circ.csv",
        "nu_tilde.csv",
        "triplet.json",
    ] {
        assert!(oracle_dir.join(f).exists(), "{f} missing");
    }
    let out = tmp.path().join("est");
    let v = stdout_json(&qid(&[
        "estimate",
        oracle_dir.join("sample.csv").to_str().unwrap(),
        "--mixture",
        "--em",
        "-o",
        out.to_str().unwrap(),
    ]));
    assert!(v["em"]["p_hat"].as_f64().is_some());
    assert!(v["mixture"]["h"].as_f64().unwrap() > 0.0);
    for f in ["g_hat.csv", "g_circ_plus.csv", "s.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn plot_kinds_write_svg_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_small_study(tmp.path(), "r", "2");
    let r = report.to_str().unwrap();

    let v = stdout_json(&qid(&[
        "plot", "--report", r, "--kind", "boxplot", "--metric", "p-hat",
    ]));
    let files: Vec<&str> = v["written"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert!(files.iter().any(|f| f.ends_with(".svg")));
    let csv = std::fs::read_to_string(files.iter().find(|f| f.ends_with(".csv")).unwrap()).unwrap();
    // two n values, each with an EM companion box
    assert_eq!(csv.lines().count(), 1 + 4);

    let v = stdout_json(&qid(&["plot", "--report", r, "--kind", "density-overlay"]));
    let svgs = v["written"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f.as_str().unwrap().ends_with(".svg"))
        .count();
    assert_eq!(svgs, 2);

    let v = stdout_json(&qid(&[
        "plot",
        "--report",
        r,
        "--kind",
        "cf-overlay",
        "--realizations",
        "4",
    ]));
    for f in v["written"].as_array().unwrap() {
        let p = f.as_str().unwrap();
        assert!(std::fs::metadata(p).unwrap().len() > 0);
    }
}

#[test]
fn plot_on_empty_report_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("empty");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("records.ndjson"), "").unwrap();
    let report = run_small_study(tmp.path(), "src", "1");
    std::fs::copy(report.join("summary.json"), dir.join("summary.json")).unwrap();
    let err = stderr_json(&qid(&[
        "plot",
        "--report",
        dir.to_str().unwrap(),
        "--kind",
        "boxplot",
    ]));
    assert_eq!(err["error"]["kind"], "EmptyReport");
}

#[test]
fn output_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_qid"))
        .args(["oracle", "--preset", "student"])
        .env("QID_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    let v = stdout_json(&out);
    assert!(target.join("cf.csv").exists());
    // no closed-form jump density for the Student contaminant
    assert!(!target.join("nu_tilde.csv").exists());
    assert_eq!(v["notes"].as_array().unwrap().len(), 1);
}
