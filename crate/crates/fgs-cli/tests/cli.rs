//! End-to-end tests of the `fgs` binary: determinism, output shapes,
//! config precedence, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fgs"));
    cmd.env("RUST_LOG", "error");
    cmd
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "fgs {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Writes a deterministic 2-feature CSV and fits a small model.
fn fit_fixture(dir: &Path) -> PathBuf {
    let csv = dir.join("train.csv");
    let mut text = String::from("x1,x2,y\n");
    for i in 0..160 {
        let x1 = (i % 40) as f64 / 39.0;
        let x2 = ((i * 7) % 40) as f64 / 39.0;
        let y = (4.0 * x1).sin() + 2.0 * x2 + 0.01 * ((i * 13) % 11) as f64;
        text.push_str(&format!("{x1},{x2},{y}\n"));
    }
    std::fs::write(&csv, text).unwrap();
    let model = dir.join("model.json");
    run_ok(
        &[
            "fit",
            "--input",
            "train.csv",
            "--trees",
            "40",
            "--min-leaf",
            "3",
            "--seed",
            "11",
            "--out",
            "model.json",
        ],
        dir,
    );
    model
}

#[test]
fn fit_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = fit_fixture(dir.path());
    let first = std::fs::read(&model).unwrap();
    run_ok(
        &[
            "fit",
            "--input",
            "train.csv",
            "--trees",
            "40",
            "--min-leaf",
            "3",
            "--seed",
            "11",
            "--out",
            "model2.json",
        ],
        dir.path(),
    );
    let second = std::fs::read(dir.path().join("model2.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn ci_csv_has_header_and_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    let out = run_ok(
        &[
            "ci",
            "--model",
            "model.json",
            "--random",
            "10",
            "--alpha",
            "0.1",
            "--h-grid",
            "0.5:4:8",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "point_id,mu_hat_h1,mu_dagger,s,lo,hi");
    assert_eq!(lines.len(), 11);
    for (i, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0], i.to_string());
        let lo: f64 = cells[4].parse().unwrap();
        let hi: f64 = cells[5].parse().unwrap();
        assert!(lo < hi);
    }
}

#[test]
fn config_precedence_is_flag_file_default() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"config_version": 1, "alpha": 0.2}"#,
    )
    .unwrap();

    let flag = run_ok(
        &[
            "ci",
            "--model",
            "model.json",
            "--point",
            "0.5,0.5",
            "--h-grid",
            "0.5:4:8",
            "--format",
            "json",
            "--config",
            "cfg.json",
            "--alpha",
            "0.1",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&flag)).unwrap();
    assert_eq!(parsed["jackknife"]["alpha"], 0.1);

    let file = run_ok(
        &[
            "ci",
            "--model",
            "model.json",
            "--point",
            "0.5,0.5",
            "--h-grid",
            "0.5:4:8",
            "--format",
            "json",
            "--config",
            "cfg.json",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&file)).unwrap();
    assert_eq!(parsed["jackknife"]["alpha"], 0.2);

    let default = run_ok(
        &[
            "ci",
            "--model",
            "model.json",
            "--point",
            "0.5,0.5",
            "--h-grid",
            "0.5:4:8",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&default)).unwrap();
    assert_eq!(parsed["jackknife"]["alpha"], 0.05);
}

#[test]
fn json_and_table_report_identical_numbers() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    let json_out = run_ok(
        &[
            "predict",
            "--model",
            "model.json",
            "--point",
            "0.5,0.5",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let table_out = run_ok(
        &[
            "predict",
            "--model",
            "model.json",
            "--point",
            "0.5,0.5",
            "--format",
            "table",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&json_out)).unwrap();
    let table = stdout_of(&table_out);
    let result = &parsed["results"][0];
    for value in [&result["mu_hat"], &result["se_mu"]] {
        assert!(
            table.contains(&value.to_string()),
            "table output lacks {value}:\n{table}"
        );
    }
    for coef in result["coefficients"].as_array().unwrap() {
        assert!(table.contains(&coef["beta_hat"].to_string()));
        assert!(table.contains(&coef["std_error"].to_string()));
    }
}

#[test]
fn varimp_emits_tidy_rows_per_resolution_and_coordinate() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    let out = run_ok(
        &[
            "varimp",
            "--model",
            "model.json",
            "--point",
            "0.5,0.5",
            "--h-grid",
            "1,2,4",
        ],
        dir.path(),
    );
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "h,coefficient,slope,se,lo,hi");
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1].starts_with("1.0,x1,"));
    assert!(lines[2].starts_with("1.0,x2,"));
    assert!(lines[5].starts_with("4.0,x1,"));
}

#[test]
fn summarize_writes_the_three_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    run_ok(
        &[
            "summarize",
            "--model",
            "model.json",
            "--out-dir",
            "sum",
            "--h-values",
            "1,2",
        ],
        dir.path(),
    );
    let bary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("sum/barycenter.json")).unwrap(),
    )
    .unwrap();
    assert!(bary["barycenter"]["frechet_variance"].as_f64().unwrap() >= 0.0);
    assert_eq!(bary["feature_names"][0], "x1");

    let deltas = std::fs::read_to_string(dir.path().join("sum/effective_bandwidths.csv")).unwrap();
    assert!(deltas.starts_with("point_id,delta_x1,delta_x2\n"));
    assert_eq!(deltas.trim_end().lines().count(), 81);

    let slopes = std::fs::read_to_string(dir.path().join("sum/slopes.csv")).unwrap();
    assert!(slopes.starts_with("point_id,h,coefficient,slope,se\n"));
    assert_eq!(slopes.trim_end().lines().count(), 1 + 80 * 2 * 2);
}

#[test]
fn compare_reports_a_gamma_estimate() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    let out = run_ok(
        &[
            "compare",
            "--input",
            "train.csv",
            "--trees",
            "20",
            "--min-leaf",
            "3",
            "--h-grid",
            "1:6:4",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let gamma = &parsed["gamma"];
    assert!(gamma["gamma_hat"].is_f64());
    assert!(gamma["tau_hat"].as_f64().unwrap() > 0.0);
    assert!(gamma["interval"]["lo"].as_f64().unwrap() < gamma["interval"]["hi"].as_f64().unwrap());
    assert_eq!(gamma["m"], 40);
}

#[test]
fn simulate_reports_coverage_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(
        &[
            "simulate",
            "--design",
            "sin4x",
            "--n",
            "120",
            "--sigma",
            "0.1",
            "--replicates",
            "2",
            "--trees",
            "30",
            "--min-leaf",
            "3",
            "--h-grid",
            "0.5:3:6",
            "--query-grid",
            "0.3:0.7:3",
            "--seed",
            "9",
            "--out-csv",
            "sim.csv",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(parsed["report"]["completed"], 2);
    let cover = parsed["mean_coverage"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&cover));

    let csv = std::fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(
        lines[0],
        "point_id,x1,true_mean,coverage,mean_length,hits,evaluations"
    );
    assert_eq!(lines.len(), 4);
}

#[test]
fn exit_codes_distinguish_usage_data_and_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());

    let usage = bin()
        .args(["ci", "--model", "model.json", "--point", "not-a-number"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(1));

    let missing = bin()
        .args([
            "predict",
            "--model",
            "no-such-model.json",
            "--point",
            "0.5,0.5",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    run_ok(
        &[
            "fit",
            "--input",
            "train.csv",
            "--trees",
            "20",
            "--min-leaf",
            "3",
            "--seed",
            "2",
            "--kernel",
            "epanechnikov_product",
            "--out",
            "epa.json",
        ],
        dir.path(),
    );
    let numerical = bin()
        .args([
            "predict", "--model", "epa.json", "--point", "40,40", "--h", "0.5",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(numerical.status.code(), Some(3));
    let message = String::from_utf8_lossy(&numerical.stderr).to_string();
    assert!(message.contains("singular local design"));
}
