use std::path::PathBuf;
use std::process::{Command, Output};

use multidep_cli::check_report_schema;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn multidep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multidep"))
        .args(args)
        .env_remove("MULTIDEP_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn every_method_emits_a_valid_report() {
    let file = fixture("dependent.csv");
    for m in ["classical", "variance", "pearson", "clt", "eigenvalue", "permutation", "bootstrap", "montecarlo"] {
        let v = json(&multidep(&["test", &file, "--method", m, "--resamples", "99"]));
        check_report_schema(&v).unwrap_or_else(|e| panic!("{m}: {e}"));
        assert_eq!(v["method"], m);
        assert!(v["p_value"].as_f64().unwrap() < 0.05, "{m}: {v}");
    }
}

#[test]
fn options_reach_the_report() {
    let v = json(&multidep(&[
        "test",
        &fixture("multivariate.csv"),
        "--vars",
        "1-2,3-4,5",
        "--beta",
        "1,0.5,1.5",
        "--family",
        "total",
        "--raw",
        "--biased",
        "--limit",
    ]));
    check_report_schema(&v).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["N"], 50);
    assert_eq!(v["kind"]["family"], "total");
    assert_eq!(v["kind"]["normalized"], false);
    assert_eq!(v["estimator"]["bias"], "biased");
    assert_eq!(v["estimator"]["horizon"], "limit");
    assert_eq!(v["beta"], serde_json::json!([1.0, 0.5, 1.5]));
}

#[test]
fn same_seed_same_bytes() {
    let file = fixture("independent.csv");
    let args = ["test", file.as_str(), "--method", "permutation", "--resamples", "199", "--seed", "7"];
    let a = multidep(&args);
    let b = multidep(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = multidep(&["test", &file, "--method", "permutation", "--resamples", "199", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let file = fixture("independent.csv");
    let args = ["test", file.as_str(), "--method", "bootstrap", "--resamples", "99", "--seed", "3"];
    let one = Command::new(env!("CARGO_BIN_EXE_multidep")).args(args).env("MULTIDEP_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_multidep")).args(args).env("MULTIDEP_THREADS", "4").output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn constant_column_gives_p_one() {
    let v = json(&multidep(&["test", &fixture("constant.csv")]));
    check_report_schema(&v).unwrap();
    assert_eq!(v["p_value"], 1.0);
    let warnings = v["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("constant variable")), "{v}");
}

#[test]
fn exit_codes() {
    let bad_data = multidep(&["test", &fixture("nonnumeric.csv")]);
    assert_eq!(bad_data.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad_data.stderr).contains("row 3, column 2"));

    let missing = multidep(&["test", "/nonexistent/file.csv"]);
    assert_eq!(missing.status.code(), Some(3));

    let file = fixture("independent.csv");
    for args in [
        vec!["test", file.as_str(), "--method", "magic"],
        vec!["test", file.as_str(), "--vars", "3-1,2"],
        vec!["test", file.as_str(), "--vars", "1-2,2-3"],
        vec!["test", file.as_str(), "--vars", "1,9"],
        vec!["test", file.as_str(), "--beta", "2.5"],
        vec!["test", file.as_str(), "--beta", "1,1"],
        vec!["test", file.as_str(), "--family", "m9"],
        vec!["test", file.as_str(), "--vars", "1-3"],
        vec!["qform", "--alphas", "0.5,-0.1", "--x", "1"],
        vec!["study", "--scenario", "nothing"],
    ] {
        let out = multidep(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }

    let bad_env = Command::new(env!("CARGO_BIN_EXE_multidep"))
        .args(["qform", "--mean", "1", "--x", "2"])
        .env("MULTIDEP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn human_format_uses_six_digits() {
    let out = multidep(&["test", &fixture("dependent.csv"), "--format", "human"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let stat = text.lines().find(|l| l.starts_with("statistic")).unwrap();
    let digits: String = stat.split_whitespace().nth(1).unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
    assert_eq!(digits.trim_start_matches('0').len(), 6, "{stat}");
}

#[test]
fn moments_report() {
    let v = json(&multidep(&["moments", &fixture("independent.csv")]));
    assert_eq!(v["variables"].as_array().unwrap().len(), 3);
    // Normalized multivariance has null mean 1 up to the finite-sample correction.
    assert!((v["null"]["mean"].as_f64().unwrap() - 1.0).abs() < 0.05);
    for var in v["variables"].as_array().unwrap() {
        assert!(var["mu1"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn qform_exact_matches_chi_square() {
    // α = (1): Q = Z², P(Z² ≥ 1) = 0.3173105...
    let v = json(&multidep(&["qform", "--alphas", "1", "--x", "1"]));
    let t = &v["tails"][0];
    assert!((t["exact"].as_f64().unwrap() - 0.317_310_507_862_914).abs() < 1e-6, "{t}");
    assert!(t["classical"]["p"].as_f64().unwrap() >= t["exact"].as_f64().unwrap() - 1e-9);
    let v = json(&multidep(&["qform", "--mean", "1", "--x", "2"]));
    assert!(v["tails"][0]["variance"].is_null());
}

#[test]
fn study_csv_is_long_format() {
    let dir = std::env::temp_dir().join(format!("multidep-study-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("study.csv");
    let out = multidep(&[
        "study",
        "--scenario",
        "bernoulli,n=2,N=20",
        "--scenario",
        "tetrahedron(0.5),N=20",
        "--method",
        "pearson",
        "--method",
        "classical:biased:limit",
        "--reps",
        "20",
        "--benchmark",
        "100",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["scenario", "method", "metric", "value"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert!(rows.iter().any(|r| &r[2] == "size"));
    assert!(rows.iter().any(|r| &r[2] == "power"));
    assert!(rows.iter().any(|r| r[1].starts_with("benchmark")));
    for r in &rows {
        let v: f64 = r[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&v), "{r:?}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
